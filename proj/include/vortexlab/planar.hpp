#pragma once

#include <string>

#include "vortexlab/field.hpp"
#include "vortexlab/fields_ops.hpp"
#include "vortexlab/radial.hpp"

namespace vortexlab {

struct SolveSettings {
  int max_iterations = 20000;
  bool backtracking = true;   // false = fixed step
  double step0 = 0.0;         // 0 = auto from grid spacing
  double tolerance = 1e-3;    // sup-norm target for EL and Coulomb residuals
  double gauge_fix_weight = 1.0;  // lambda
  enum class BoundaryMode { VortexTrace, Vacuum, Provided } boundary = BoundaryMode::Provided;
  int stagnation_limit = 50;
  // Optional periodic Coulomb re-projection (0 = final projection only).
  // A pure gauge motion: it leaves gauge-invariant observables untouched but
  // removes the slowly relaxing gauge drift of the penalty flow, whose
  // smallest rate is lambda * mu_1^2 with mu_1 the first Neumann eigenvalue.
  int coulomb_project_every = 0;
  std::array<double, 2> vortex_center = {0.0, 0.0};
};

struct ConvergenceReport {
  bool converged = false;
  std::string status;  // "converged" | "not converged" | "stagnation"
  int iterations = 0;  // accepted steps
  int rejected_steps = 0;
  double el_residual_sup = 0.0;
  double coulomb_residual_sup = 0.0;
  EnergyBreakdown energy;
  double wall_seconds = 0.0;
};

/// Gradient flow on E_eps + lambda \int (d*A)^2 with Dirichlet boundary data,
/// descending along the epsilon-weighted L2 gradient with backtracking, until
/// the sup norms of the Euler-Lagrange and Coulomb residuals (interior nodes)
/// drop below `tolerance`. A final Coulomb projection is applied on success.
/// `profile` is required for BoundaryMode::VortexTrace.
std::pair<FieldConfiguration, ConvergenceReport> solve_planar(
    double epsilon, const Grid2& grid, const FieldConfiguration& init,
    const SolveSettings& settings, const RadialProfile* profile = nullptr);

/// Gauge-projects onto Coulomb gauge: solves the Neumann problem
/// Lap gamma = div A and applies G_{-gamma}; d*A = 0 holds afterwards up to
/// the discretization floor. With `enforce_normal_boundary` the Neumann data
/// is dgamma/dnu = A(nu), so the result also satisfies A(nu) ~ 0 on the
/// boundary; without it the data is homogeneous, which reproduces a known
/// compactly supported gauge function exactly.
FieldConfiguration project_coulomb(const FieldConfiguration& config,
                                   bool enforce_normal_boundary = true,
                                   double cg_tol = 1e-10, int cg_max_iter = 20000);

}  // namespace vortexlab
