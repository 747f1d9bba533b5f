#pragma once

#include <Eigen/Sparse>
#include <cstdint>

#include "vortexlab/field.hpp"
#include "vortexlab/radial.hpp"

namespace vortexlab {

/// Discrete linearized operators at a base configuration.
///
/// Degrees of freedom are block-major over nodes: block 0 = Re phi,
/// block 1 = Im phi, blocks 2..2+d-1 = omega components; dof = k*N + i.
/// Boundary rows of L are zero (homogeneous Dirichlet residual convention).
///
///   L (phi, omega) = (-e^2 Lap^A phi - (1/2)(1 - 3|u|^2) phi + 2 i e^2 grad^A u . omega,
///                     -e^2 Lap omega + |u|^2 omega - 2 <grad^A u, i phi>)
///   Theta[gamma]   = (i u gamma, d gamma)
///   Theta*(xi, B)  = Re(i u conj(xi)) + e^2 d*B
struct LinearizedSystem {
  FieldConfiguration base;
  Eigen::SparseMatrix<double> L;          // (2+d)N x (2+d)N
  Eigen::SparseMatrix<double> Theta;      // (2+d)N x N
  Eigen::SparseMatrix<double> ThetaStar;  // N x (2+d)N

  size_t nodes() const { return base.size(); }
  int blocks() const { return 2 + base.lat.dim(); }

  Eigen::VectorXd pack(const Perturbation& p) const;
  Perturbation unpack(const Eigen::VectorXd& v) const;

  Perturbation apply_L(const Perturbation& p) const;
  Perturbation apply_Theta(const std::vector<double>& gamma) const;
  std::vector<double> apply_ThetaStar(const Perturbation& p) const;
};

LinearizedSystem assemble(const FieldConfiguration& base);

/// Samples the displayed translational zero modes of the epsilon = 1 vortex,
///   v1 = (f', (a'/r) dz^2),  v2 = (i f', -(a'/r) dz^1),
/// on the grid, centered at `center`.
std::pair<Perturbation, Perturbation> translational_zero_modes(
    const RadialProfile& profile, const Grid2& grid, std::array<double, 2> center = {0, 0});

struct DecompositionCheck {
  double discrepancy_rel = 0.0;  // |S'P - (L - Theta Theta*)P| / max norms
  double s_prime_norm = 0.0;
  double l_minus_tt_norm = 0.0;
};

/// Compares the directional difference of the Euler-Lagrange operator,
/// S'P ~ (S(W + dP) - S(W - dP)) / (2 d), against (L - Theta Theta*) P.
/// Norms are the epsilon-weighted L2 norm over interior nodes.
DecompositionCheck decomposition_check(const LinearizedSystem& system, const Perturbation& p,
                                       double delta);

struct RitzReport {
  std::vector<double> values;     // ascending
  std::vector<double> residuals;  // |B x - lambda M x|_{M^-1} / |x|_M
  int iterations = 0;
};

/// Smallest `k` Ritz values of L restricted to the discretely
/// gauge-orthogonal subspace (Theta* P = 0), with the sampled translational
/// modes deflated. Projected block inverse-power iteration on the
/// symmetrized epsilon-weighted form.
RitzReport smallest_ritz_values(const LinearizedSystem& system,
                                const std::pair<Perturbation, Perturbation>& deflate, int k,
                                double rel_tol = 1e-6, uint64_t seed = 1234);

}  // namespace vortexlab
