#pragma once

#include <array>
#include <functional>
#include <string>

#include "vortexlab/field.hpp"
#include "vortexlab/grid.hpp"
#include "vortexlab/interp.hpp"
#include "vortexlab/radial.hpp"

namespace vortexlab {

/// Graph h: B^n -> R^2 over a tangential grid, with derivatives, second
/// fundamental form and mean curvature computed from the samples.
///
/// Pi is stored in the orthonormalized adapted frame at each node (the frame
/// the metric expansion is phrased in); H is the mean curvature vector in the
/// ambient normal frame.
struct FermiChart {
  Lattice tan;                 // n-dimensional tangential lattice
  std::vector<double> h;       // h[beta*N + i], beta in {0, 1}
  std::vector<double> dh;      // dh[(beta*n + j)*N + i]
  std::vector<double> d2h;     // d2h[((beta*n + j)*n + k)*N + i]
  std::vector<double> Pi;      // same layout as d2h, orthonormal frame
  std::vector<double> Hvec;    // Hvec[beta*N + i]
  double tube_radius = 0.0;

  int n() const { return tan.dim(); }
  size_t nodes() const { return tan.size(); }
  double h_at(int beta, size_t i) const { return h[static_cast<size_t>(beta) * nodes() + i]; }
};

/// Builds a chart from an analytic graph sampled on the tangential grid.
FermiChart build_chart(const Lattice& tangential, double tube_radius,
                       const std::function<std::array<double, 2>(const std::vector<double>&)>& h);

/// Chart import: CSV of h samples (columns y..., h1, h2) with a JSON
/// descriptor holding n, grid and tau.
FermiChart chart_from_csv(const std::string& csv_path, const std::string& descriptor_path);
void chart_to_csv(const FermiChart& chart, const std::string& csv_path,
                  const std::string& descriptor_path);

/// Truncated metric expansion g(y, z) = (I - z^alpha Pi_alpha)^2 through
/// quadratic order, in the orthonormal adapted frame at the node.
std::vector<double> metric_expansion(const FermiChart& chart, size_t y_node,
                                     std::array<double, 2> z);

/// The five geometric coefficient families of the tube at (y, z), evaluated
/// from the truncated expansion: inverse metric a^{ij}, tangential families
/// b_s^{ik} and c^k (finite differences across neighbouring tangential
/// nodes), normal-derivative family d_j^{beta k} and mean curvature H_z^beta
/// (finite differences in z on the truncation).
struct GeometricCoefficients {
  int n = 0;
  std::vector<double> a;           // a[i*n + j]
  std::vector<double> b;           // b[(s*n + i)*n + k]
  std::vector<double> c;           // c[k]
  std::vector<double> d;           // d[(beta*n + k)*n + j] = d_j^{beta k}
  std::array<double, 2> Hz = {0.0, 0.0};
};
GeometricCoefficients geometric_coefficients(const FermiChart& chart, size_t y_node,
                                             std::array<double, 2> z);

/// The 2D cutoff vortex: quintic blend between the exact vortex and the pure
/// gauge pair (x/|x|, dtheta) on the annulus [3|log eps|, 6|log eps|], with
/// the residual (v, b) of the eps = 1 equation evaluated analytically on a
/// radial grid.
struct CutoffVortex {
  double epsilon = 0.0;
  double r_inner = 0.0;  // 3 |log eps|
  double r_outer = 0.0;  // 6 |log eps|
  double alpha = 0.0;    // series slope near 0 (inherited from the profile)
  std::vector<double> r, f, a, f_prime, a_prime;
  std::vector<double> res_v, res_b;  // |v|(r), |b|(r)
  double sup_v = 0.0, sup_b = 0.0;
  double zeta_sup_d1 = 0.0, zeta_sup_d2 = 0.0, zeta_sup_d3 = 0.0;

  double f_at(double s) const;
  double a_at(double s) const;
  double fp_at(double s) const;
  double ap_at(double s) const;
  double ap_over_r(double s) const;
  void build_interpolants() const;

 private:
  mutable MonotoneCubic if_, ia_, ifp_, iap_;
  mutable bool built_ = false;
};

CutoffVortex build_cutoff_vortex(double epsilon, const RadialProfile& profile);

/// Concentrating ansatz on the cylinder: u(y,z) = u~((z - h(y))/eps),
/// A = (1/eps) A~((z - h(y))/eps) with normal (dz) components only.
FieldConfiguration build_ansatz(const FermiChart& chart, double epsilon,
                                const CutoffVortex& cutoff, const GridN& grid);

/// Residual of the ansatz and its normal-plane zero-mode projections.
///
/// c_beta is the coefficient of the approximate zero mode v~_beta on the
/// right-hand side of the perturbation equation (the projection of
/// -S_eps(W0)), normalized so that c_beta / |v~_beta|^2 is comparable with
/// -(H_z^beta + Lap_M h^beta). Norms and projections use the rescaled
/// (eps = 1) normal-plane pairing, truncated at the cutoff outer radius.
struct AnsatzResidualReport {
  std::vector<size_t> y_nodes;          // interior tangential nodes reported
  std::vector<double> c1, c2;           // projected coefficients per y node
  std::vector<double> norm_sq1, norm_sq2;  // |v~_beta|^2 per y node
  std::vector<double> prediction1, prediction2;  // -(H_z + Lap_M h)^beta
  std::vector<double> gauge1, gauge2;   // pure-gauge components (diagnostic)
  double projected_l2 = 0.0;      // L2_y norm of the zero-mode part
  double remainder_raw_l2 = 0.0;  // residual minus zero-mode projection
  double remainder_gauge_cleaned_l2 = 0.0;  // after also removing the
                                            // pure-gauge span
};
AnsatzResidualReport ansatz_residual(const FieldConfiguration& ansatz, const FermiChart& chart,
                                     const CutoffVortex& cutoff, double epsilon);

/// Orthogonality diagnostics for a measured perturbation (eps = 1 picture):
/// the two translational projection integrals per tangential node and the
/// pointwise gauge condition (d* omega)(y,z) + <phi, i u0(z - h(y))>.
struct OrthogonalityReport {
  std::vector<double> coeff1, coeff2;      // per tangential node
  std::vector<double> gauge_residual;      // per grid node
};
OrthogonalityReport project_orthogonality(const Perturbation& pert, const GridN& grid,
                                          const FermiChart& chart,
                                          const RadialProfile& profile);

}  // namespace vortexlab
