#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "vortexlab/fields_ops.hpp"
#include "vortexlab/planar.hpp"

using namespace vortexlab;
using testutil::shared_profile;

namespace {

// |u|, |F| and energy-density comparison against the radial oracle inside a
// bulk ball
double bulk_observable_gap(const FieldConfiguration& w, double r_bulk) {
  const RadialProfile& prof = shared_profile(30.0);
  const Lattice& lat = w.lat;
  const size_t n = lat.size();
  const size_t n1 = lat.shape[1];
  const CurvatureField f = curvature(w);
  double worst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double x = lat.coord(0, static_cast<int>(i / n1));
    const double y = lat.coord(1, static_cast<int>(i % n1));
    const double r = std::hypot(x, y);
    if (r > r_bulk) continue;
    const double s = r / w.epsilon;
    worst = std::max(worst, std::abs(std::abs(w.u[i]) - prof.f_at(s)));
    const double f_oracle = prof.ap_over_r(s) / (w.epsilon * w.epsilon);
    worst = std::max(worst, std::abs(f.comp[i] - f_oracle));
  }
  return worst;
}

}  // namespace

TEST_CASE("solve_planar: exact vortex is a fixed point (zero iterations)") {
  const Grid2 grid = Grid2::from_nodes(12.0, 129);
  const double h = grid.spacing;
  const FieldConfiguration init = sample_vortex(shared_profile(30.0), grid, {0.0, 0.0}, 1.0);
  SolveSettings st;
  st.tolerance = 10.0 * h * h;  // above the sampling residual floor
  st.boundary = SolveSettings::BoundaryMode::Provided;
  const auto [w, rep] = solve_planar(1.0, grid, init, st);
  CHECK(rep.iterations == 0);
  CHECK(rep.converged);
  CHECK(rep.el_residual_sup <= st.tolerance);
}

TEST_CASE("solve_planar: vortex trace + interior vacuum converges to the vortex") {
  const Grid2 grid = Grid2::from_nodes(10.0, 129);
  const Lattice lat = Lattice::from(grid);
  FieldConfiguration init = FieldConfiguration::vacuum(lat, 1.0);
  SolveSettings st;
  st.boundary = SolveSettings::BoundaryMode::VortexTrace;
  const double h = grid.spacing;
  // the strong-form residual floor of the descent is ~0.1 h^2; stopping at
  // 0.3 h^2 is past the slow shell-collapse transient but above the floor
  st.tolerance = 0.3 * h * h;
  st.max_iterations = 60000;
  st.coulomb_project_every = 250;
  const RadialProfile& prof = shared_profile(15.0);
  const auto [w, rep] = solve_planar(1.0, grid, init, st, &prof);
  CHECK(rep.converged);
  CHECK(rep.el_residual_sup <= st.tolerance);
  CHECK(rep.coulomb_residual_sup <= st.tolerance);
  CHECK(winding_number(w, {0.0, 0.0}, 3.0) == 1);
  CHECK(bulk_observable_gap(w, 5.0) <= 3.0 * h * h);

  // degree conservation: the Dirichlet trace pins the boundary winding
  const FieldConfiguration trace = sample_vortex(prof, grid, {0.0, 0.0}, 1.0);
  CHECK(winding_number(trace, {0.0, 0.0}, 9.5) == winding_number(w, {0.0, 0.0}, 9.5));
}

TEST_CASE("solve_planar: gauge-composed vortex converges to gauge-equivalent data") {
  const Grid2 grid = Grid2::from_nodes(10.0, 97);
  const Lattice lat = Lattice::from(grid);
  const size_t n = lat.size();
  const RadialProfile& prof = shared_profile(15.0);
  FieldConfiguration init = sample_vortex(prof, grid, {0.0, 0.0}, 1.0);

  // gamma = 0.3 x1 (harmonic, so the target still satisfies d*A = 0)
  std::vector<double> gamma(n);
  for (size_t i = 0; i < n; ++i)
    gamma[i] = 0.3 * lat.coord(0, static_cast<int>(i / lat.shape[1]));
  init = gauge_transform(init, gamma);

  // small interior bump so the solver has genuine work to do
  const Perturbation bump = testutil::random_perturbation(lat, 77, 4);
  for (size_t i = 0; i < n; ++i) {
    init.u[i] += 0.05 * bump.phi[i];
    for (int c = 0; c < 2; ++c) init.A[c * n + i] += 0.05 * bump.omega[c * n + i];
  }

  SolveSettings st;
  st.boundary = SolveSettings::BoundaryMode::Provided;
  const double h = grid.spacing;
  st.tolerance = 0.25 * h * h;
  st.max_iterations = 60000;
  st.coulomb_project_every = 250;
  const auto [w, rep] = solve_planar(1.0, grid, init, st);
  CHECK(rep.converged);
  CHECK(rep.iterations > 0);
  CHECK(bulk_observable_gap(w, 5.0) <= 3.0 * h * h);
}

TEST_CASE("solve_planar: gauge-fix weight changes the path, not the fixed point") {
  const Grid2 grid = Grid2::from_nodes(8.0, 49);
  const Lattice lat = Lattice::from(grid);
  const RadialProfile& prof = shared_profile(12.0);
  FieldConfiguration init = sample_vortex(prof, grid, {0.0, 0.0}, 1.0);
  const size_t n = lat.size();
  const Perturbation bump = testutil::random_perturbation(lat, 5, 4);
  for (size_t i = 0; i < n; ++i) init.u[i] += 0.05 * bump.phi[i];

  for (double lambda : {0.5, 2.0}) {
    SolveSettings st;
    st.boundary = SolveSettings::BoundaryMode::Provided;
    st.tolerance = 0.25 * grid.spacing * grid.spacing;
    st.gauge_fix_weight = lambda;
    st.max_iterations = 60000;
    st.coulomb_project_every = 250;
    const auto [w, rep] = solve_planar(1.0, grid, init, st);
    CHECK(rep.converged);
    CHECK(rep.coulomb_residual_sup <= st.tolerance);
  }
}

TEST_CASE("solve_planar: stagnation and iteration-cap errors") {
  const Grid2 grid = Grid2::from_nodes(8.0, 33);
  const Lattice lat = Lattice::from(grid);
  const RadialProfile& prof = shared_profile(12.0);
  const FieldConfiguration init = sample_vortex(prof, grid, {0.0, 0.0}, 1.0);

  SolveSettings floor_bad;
  floor_bad.boundary = SolveSettings::BoundaryMode::Provided;
  floor_bad.tolerance = 1e-12;  // below the strong-form discretization floor
  floor_bad.max_iterations = 1000000;
  CHECK_THROWS_WITH_AS(solve_planar(1.0, grid, init, floor_bad, &prof),
                       doctest::Contains("stagnation"), NumericalError);

  SolveSettings fixed_bad;
  fixed_bad.boundary = SolveSettings::BoundaryMode::Provided;
  fixed_bad.backtracking = false;
  fixed_bad.step0 = 10.0;  // unstable fixed step: energy cannot decrease
  fixed_bad.tolerance = 1e-10;
  CHECK_THROWS_AS(solve_planar(1.0, grid, init, fixed_bad, &prof), NumericalError);

  SolveSettings capped;
  capped.boundary = SolveSettings::BoundaryMode::Provided;
  capped.tolerance = 1e-12;  // unreachable
  capped.max_iterations = 3;
  CHECK_THROWS_AS(solve_planar(1.0, grid, init, capped, &prof), NumericalError);
}

TEST_CASE("project_coulomb: compact divergence-free data is a fixed point") {
  const Grid2 grid = Grid2::from_nodes(8.0, 65);
  const Lattice lat = Lattice::from(grid);
  const size_t n = lat.size();
  FieldConfiguration w = FieldConfiguration::vacuum(lat, 1.0);
  // A = (d2 psi, -d1 psi) for a compact bump psi: div A = 0, A(nu) = 0
  const auto psi = testutil::random_scalar_field(lat, 9, 5, 2.0);
  const auto& st = lat.strides();
  std::vector<int> idx(2);
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    w.A[i] = stencil::d1(psi, i, idx[1], lat.shape[1], st[1], lat.spacing[1]);
    w.A[n + i] = -stencil::d1(psi, i, idx[0], lat.shape[0], st[0], lat.spacing[0]);
  }
  const FieldConfiguration p = project_coulomb(w);
  double gap = 0.0;
  for (size_t i = 0; i < n; ++i) {
    gap = std::max(gap, std::abs(p.A[i] - w.A[i]));
    gap = std::max(gap, std::abs(p.A[n + i] - w.A[n + i]));
    gap = std::max(gap, std::abs(p.u[i] - w.u[i]));
  }
  const double h = grid.spacing;
  CHECK(gap <= 2.0 * h * h);
}

TEST_CASE("project_coulomb: recovers a known compact gauge function") {
  const Grid2 grid = Grid2::from_nodes(8.0, 97);
  const double h = grid.spacing;
  const RadialProfile& prof = shared_profile(12.0);
  const FieldConfiguration w0 = sample_vortex(prof, grid, {0.0, 0.0}, 1.0);
  const auto gamma = testutil::random_scalar_field(w0.lat, 21, 5, 2.0);
  const FieldConfiguration wg = gauge_transform(w0, gamma);

  // homogeneous-Neumann variant: the compact gamma is reproduced exactly
  const FieldConfiguration rec = project_coulomb(wg, /*enforce_normal_boundary=*/false);
  const size_t n = w0.size();
  double worst_a = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c)
      worst_a = std::max(worst_a, std::abs(rec.A[c * n + i] - w0.A[c * n + i]));
  CHECK(worst_a <= 5.0 * h * h);

  // |u| is unchanged exactly by any gauge projection
  for (size_t i = 0; i < n; i += 1317)
    CHECK(std::abs(std::abs(rec.u[i]) - std::abs(wg.u[i])) <= 1e-13);

  // <grad^A u, i u> is gauge-invariant up to O(h^2)
  const GradientField g0 = covariant_gradient(w0);
  const GradientField g1 = covariant_gradient(rec);
  double worst_j = 0.0;
  std::vector<int> idx(2);
  for (size_t i = 0; i < n; ++i) {
    w0.lat.unravel(i, idx);
    if (idx[0] < 2 || idx[1] < 2 || idx[0] > grid.nodes - 3 || idx[1] > grid.nodes - 3)
      continue;
    for (int c = 0; c < 2; ++c) {
      const double j0 = herm(g0.comp[c * n + i], cplx(0, 1) * w0.u[i]);
      const double j1 = herm(g1.comp[c * n + i], cplx(0, 1) * rec.u[i]);
      worst_j = std::max(worst_j, std::abs(j1 - j0));
    }
  }
  CHECK(worst_j <= 5.0 * h * h);
}

TEST_CASE("project_coulomb: default mode zeroes the normal trace") {
  const Grid2 grid = Grid2::from_nodes(8.0, 65);
  const RadialProfile& prof = shared_profile(12.0);
  const FieldConfiguration w = sample_vortex(prof, grid, {0.0, 0.0}, 1.0);
  const FieldConfiguration p = project_coulomb(w, true);

  const Lattice& lat = p.lat;
  const size_t n = lat.size();
  const auto coul = coulomb_residual(p);
  const double h = grid.spacing;
  CHECK(sup_norm_interior(lat, coul, 2) <= 5.0 * h * h);

  // A(nu) on the box faces drops well below the unprojected trace
  double normal_before = 0.0, normal_after = 0.0;
  std::vector<int> idx(2);
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    for (int a = 0; a < 2; ++a) {
      if (idx[a] != 0 && idx[a] != lat.shape[a] - 1) continue;
      normal_before = std::max(normal_before, std::abs(w.A[a * n + i]));
      normal_after = std::max(normal_after, std::abs(p.A[a * n + i]));
    }
  }
  CHECK(normal_after <= 0.2 * normal_before);
}
