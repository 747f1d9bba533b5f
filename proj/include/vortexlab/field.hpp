#pragma once

#include <complex>
#include <vector>

#include "vortexlab/grid.hpp"

namespace vortexlab {

using cplx = std::complex<double>;

/// Higgs field + connection 1-form on a lattice. Complex values are stored
/// as interleaved (re, im) pairs per node (std::complex layout); 1-form
/// components are component-major: A[c * size + i].
struct FieldConfiguration {
  Lattice lat;
  std::vector<cplx> u;
  std::vector<double> A;
  double epsilon = 1.0;

  size_t size() const { return lat.size(); }
  double a_at(int c, size_t i) const { return A[static_cast<size_t>(c) * size() + i]; }
  double& a_at(int c, size_t i) { return A[static_cast<size_t>(c) * size() + i]; }

  static FieldConfiguration zeros(const Lattice& lat, double epsilon);
  static FieldConfiguration vacuum(const Lattice& lat, double epsilon);

  /// Checks layout, epsilon > 0 and finiteness of every stored value;
  /// throws ValidationError naming the first offending node.
  void validate() const;
};

/// Perturbation (phi, omega) matching a configuration's layout.
struct Perturbation {
  std::vector<cplx> phi;
  std::vector<double> omega;  // component-major, same layout as A

  static Perturbation zeros(const Lattice& lat);
  size_t node_count(const Lattice& lat) const;
};

// ---------------------------------------------------------------------------
// Second-order finite differences on a lattice (centered in the interior,
// one-sided second-order at the boundary). The per-node forms take the
// unraveled index of the node; the axis stride and extent select direction.

namespace stencil {

template <typename T>
inline T d1(const std::vector<T>& v, size_t i, int ia, int na, size_t stride, double h) {
  if (ia > 0 && ia < na - 1) return (v[i + stride] - v[i - stride]) / (2.0 * h);
  if (ia == 0) return (-3.0 * v[i] + 4.0 * v[i + stride] - v[i + 2 * stride]) / (2.0 * h);
  return (3.0 * v[i] - 4.0 * v[i - stride] + v[i - 2 * stride]) / (2.0 * h);
}

template <typename T>
inline T d2(const std::vector<T>& v, size_t i, int ia, int na, size_t stride, double h) {
  const double h2 = h * h;
  if (ia > 0 && ia < na - 1) return (v[i + stride] - 2.0 * v[i] + v[i - stride]) / h2;
  if (ia == 0)
    return (2.0 * v[i] - 5.0 * v[i + stride] + 4.0 * v[i + 2 * stride] - v[i + 3 * stride]) / h2;
  return (2.0 * v[i] - 5.0 * v[i - stride] + 4.0 * v[i - 2 * stride] - v[i - 3 * stride]) / h2;
}

}  // namespace stencil

/// Real part of the Hermitian product.
inline double herm(cplx a, cplx b) { return a.real() * b.real() + a.imag() * b.imag(); }

// epsilon-weighted L2 inner product of perturbation pairs on a lattice
// (trapezoidal weights, deterministic pairwise reduction).
double inner_eps(const Lattice& lat, double epsilon, const Perturbation& p,
                 const Perturbation& q);
double norm_eps(const Lattice& lat, double epsilon, const Perturbation& p);

// Sup norm over all nodes/components.
double sup_norm(const Perturbation& p);

}  // namespace vortexlab
