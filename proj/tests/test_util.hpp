#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "vortexlab/field.hpp"
#include "vortexlab/radial.hpp"
#include "vortexlab/util.hpp"

namespace vortexlab::testutil {

inline const RadialProfile& shared_profile(double r_max = 20.0) {
  static RadialProfile p20 = solve_bogomolny(20.0, 1e-8);
  static RadialProfile p30 = solve_bogomolny(30.0, 1e-8);
  return r_max <= 20.0 ? p20 : p30;
}

// Smooth window vanishing (with derivatives) within `margin` of the boundary.
inline double boundary_window(const Lattice& lat, const std::vector<double>& x, double margin) {
  double w = 1.0;
  for (int a = 0; a < lat.dim(); ++a) {
    const double lo = lat.origin[a];
    const double hi = lat.origin[a] + lat.spacing[a] * (lat.shape[a] - 1);
    w *= smoothstep5((x[a] - lo) / margin) * smoothstep5((hi - x[a]) / margin);
  }
  return w;
}

// Sum of `nbumps` random Gaussian bumps, windowed to compact support.
inline std::vector<double> random_scalar_field(const Lattice& lat, uint64_t seed, int nbumps = 8,
                                               double margin = 1.5, double sig_lo = 0.6,
                                               double sig_hi = 1.5, bool window = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int d = lat.dim();
  std::vector<double> centers(nbumps * d), sig(nbumps), amp(nbumps);
  for (int b = 0; b < nbumps; ++b) {
    for (int a = 0; a < d; ++a) {
      const double lo = lat.origin[a] + margin;
      const double hi = lat.origin[a] + lat.spacing[a] * (lat.shape[a] - 1) - margin;
      centers[b * d + a] = lo + (hi - lo) * unit(rng);
    }
    sig[b] = sig_lo + (sig_hi - sig_lo) * unit(rng);
    amp[b] = 2.0 * unit(rng) - 1.0;
  }
  std::vector<double> out(lat.size(), 0.0);
  std::vector<int> idx(d);
  std::vector<double> x(d);
  for (size_t i = 0; i < lat.size(); ++i) {
    lat.unravel(i, idx);
    lat.coords(idx, x);
    double v = 0.0;
    for (int b = 0; b < nbumps; ++b) {
      double q = 0.0;
      for (int a = 0; a < d; ++a) {
        const double dd = x[a] - centers[b * d + a];
        q += dd * dd;
      }
      v += amp[b] * std::exp(-q / (2.0 * sig[b] * sig[b]));
    }
    out[i] = window ? v * boundary_window(lat, x, margin) : v;
  }
  return out;
}

inline Perturbation random_perturbation(const Lattice& lat, uint64_t seed, int nbumps = 6,
                                        double margin = 1.5) {
  Perturbation p = Perturbation::zeros(lat);
  const size_t n = lat.size();
  const auto re = random_scalar_field(lat, seed, nbumps, margin);
  const auto im = random_scalar_field(lat, seed + 101, nbumps, margin);
  for (size_t i = 0; i < n; ++i) p.phi[i] = cplx(re[i], im[i]);
  for (int c = 0; c < lat.dim(); ++c) {
    const auto w = random_scalar_field(lat, seed + 202 + 37 * c, nbumps, margin);
    for (size_t i = 0; i < n; ++i) p.omega[c * n + i] = w[i];
  }
  return p;
}

inline void normalize_eps(const Lattice& lat, double eps, Perturbation& p) {
  const double nm = norm_eps(lat, eps, p);
  const size_t n = lat.size();
  for (size_t i = 0; i < n; ++i) p.phi[i] /= nm;
  for (size_t i = 0; i < p.omega.size(); ++i) p.omega[i] /= nm;
  (void)n;
}

}  // namespace vortexlab::testutil
