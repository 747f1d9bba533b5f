#pragma once

#include <utility>

#include "vortexlab/field.hpp"

namespace vortexlab {

/// Per-direction components of the gauged derivative, component-major.
struct GradientField {
  int dim = 0;
  std::vector<cplx> comp;
  cplx at(int c, size_t i) const { return comp[static_cast<size_t>(c) * stride_ + i]; }
  size_t stride_ = 0;
};

/// Antisymmetric curvature components F_ab for a < b, pair-major.
struct CurvatureField {
  int dim = 0;
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> comp;
  size_t stride_ = 0;
  double at(size_t p, size_t i) const { return comp[p * stride_ + i]; }
  int pair_index(int a, int b) const;
};

/// Integration region for quadratures: whole domain, a ball, or an annulus.
struct Region {
  enum class Kind { All, Ball, Annulus } kind = Kind::All;
  std::vector<double> center;
  double r0 = 0.0, r1 = 0.0;

  static Region all() { return {}; }
  static Region ball(std::vector<double> center, double r);
  static Region annulus(std::vector<double> center, double r0, double r1);
  bool contains(const std::vector<double>& x) const;
};

struct EnergyBreakdown {
  double total = 0.0;
  double kinetic = 0.0;    // |grad_A u|^2 part
  double curvature = 0.0;  // eps^2 |F_A|^2 part
  double potential = 0.0;  // (1-|u|^2)^2 / (4 eps^2) part
};

// nabla^A u = du - i A u, centered differences (one-sided at the boundary).
GradientField covariant_gradient(const FieldConfiguration& config);

// F_ab = d_a A_b - d_b A_a. In 2D the single scalar F_12 is the pair (0,1).
CurvatureField curvature(const FieldConfiguration& config);

// Trapezoidal quadrature of the energy density over the region.
EnergyBreakdown energy(const FieldConfiguration& config, const Region& region);

// S_eps(u, A) = (-eps^2 Lap^A u - (1/2)(1-|u|^2) u,
//                eps^2 d*dA - <grad^A u, i u>).
Perturbation euler_lagrange_residual(const FieldConfiguration& config);

/// 2D self-duality residuals: (eps F_12 - (1-|u|^2)/(2 eps), dbar_A u).
struct BogomolnyResidual {
  std::vector<double> first;
  std::vector<cplx> second;
};
BogomolnyResidual bogomolny_residual(const FieldConfiguration& config);

// G_gamma(u, A) = (u e^{i gamma}, A + d gamma).
FieldConfiguration gauge_transform(const FieldConfiguration& config,
                                   const std::vector<double>& gamma);

// d*A = -sum_a d_a A_a.
std::vector<double> coulomb_residual(const FieldConfiguration& config);

// Pointwise energy density of one node (integrand of `energy`).
double energy_density_at(const FieldConfiguration& config, const GradientField& grad,
                         const CurvatureField& curv, size_t i);

// Sup norm over nodes at least `margin` nodes away from every face.
double sup_norm_interior(const Lattice& lat, const Perturbation& p, int margin = 1);
double sup_norm_interior(const Lattice& lat, const std::vector<double>& field, int margin = 1);
double sup_norm_interior(const Lattice& lat, const std::vector<cplx>& field, int margin = 1);

// Winding number of u around a circle (accumulated phase at sample points).
int winding_number(const FieldConfiguration& config, const std::vector<double>& center,
                   double radius, int samples = 256);

}  // namespace vortexlab
