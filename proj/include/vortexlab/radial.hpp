#pragma once

#include <array>
#include <string>
#include <vector>

#include "vortexlab/field.hpp"
#include "vortexlab/grid.hpp"
#include "vortexlab/interp.hpp"

namespace vortexlab {

/// Degree-1 vortex profile pair (f, a) with derivative samples on a uniform
/// radial grid. f(0) = a(0) = 0; both increase strictly to 1.
struct RadialProfile {
  std::vector<double> r;
  std::vector<double> f;
  std::vector<double> a;
  std::vector<double> f_prime;
  std::vector<double> a_prime;
  double shoot_slope = 0.0;  // alpha with f ~ alpha r near 0
  double r_max = 0.0;
  double tol = 0.0;
  double tail_constant = 0.0;     // c in 1 - f ~ c K0(r)
  double boundary_dev_f = 0.0;    // 1 - f(r_max)
  double boundary_dev_a = 0.0;    // 1 - a(r_max)

  double f_at(double rr) const;
  double a_at(double rr) const;
  double fp_at(double rr) const;
  double ap_at(double rr) const;
  /// a'(r)/r with its finite limit (1 - f^2)/2 at r = 0.
  double ap_over_r(double rr) const;

  void build_interpolants() const;

 private:
  mutable MonotoneCubic if_, ia_, ifp_, iap_;
  mutable bool built_ = false;
};

/// Shooting solve of the first-order vortex system
///   a'/r = (1 - f^2)/2,   f' = (1 - a) f / r
/// with a two-term series launch at r ~ 0 and bisection on the slope alpha.
/// Beyond the shooting trust region the profile is continued with the
/// stable-manifold tail 1 - f = c K0(r), 1 - a = c r K1(r), blended smoothly;
/// single shooting cannot track the connecting orbit past r ~ 17 in double
/// precision.
RadialProfile solve_bogomolny(double r_max, double tol);

/// Sup norms of both second-order ODE residuals on interior nodes
/// (stored first derivatives, centered second differences).
std::pair<double, double> second_order_residual(const RadialProfile& profile);

struct DecayFit {
  double rate_f = 0.0;
  double rate_a = 0.0;
};

/// Least-squares exponential decay rates of (1 - f) and (1 - a) on a window.
DecayFit decay_fit(const RadialProfile& profile, double r_lo, double r_hi);

/// Samples the rescaled vortex u = f(rho/eps) e^{i theta},
/// A = a(rho/eps) (-z2, z1)/rho^2 centered at `center`.
FieldConfiguration sample_vortex(const RadialProfile& profile, const Grid2& grid,
                                 std::array<double, 2> center, double epsilon);

/// Centered-difference residuals of the first-order system on the stored
/// values (independent of the stored derivative samples).
std::pair<double, double> first_order_fd_residual(const RadialProfile& profile);

// CSV export/import (columns r,f,a,fp,ap) with a JSON sidecar for alpha, tol,
// r_max.
void profile_to_csv(const RadialProfile& profile, const std::string& csv_path,
                    const std::string& sidecar_path);
RadialProfile profile_from_csv(const std::string& csv_path, const std::string& sidecar_path);

}  // namespace vortexlab
