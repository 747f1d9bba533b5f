#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "test_util.hpp"
#include "vortexlab/fields_ops.hpp"
#include "vortexlab/radial.hpp"

using namespace vortexlab;
using testutil::shared_profile;

namespace {

constexpr double kPi = std::numbers::pi;

FieldConfiguration vortex_on(double half_width, int nodes, double eps = 1.0) {
  const Grid2 g = Grid2::from_nodes(half_width, nodes);
  const double need = half_width * std::numbers::sqrt2 / eps;
  return sample_vortex(shared_profile(need), g, {0.0, 0.0}, eps);
}

// The chosen polynomial-times-Gaussian non-solution used as the analytic
// oracle for the Euler-Lagrange operator:
//   u = (x + i y) exp(-r^2/2),  A = c (-y, x) exp(-r^2/2),  eps = 1.
struct AnalyticOracle {
  static constexpr double c = 0.3;
  static cplx u(double x, double y) { return cplx(x, y) * std::exp(-(x * x + y * y) / 2); }
  static double A1(double x, double y) { return -c * y * std::exp(-(x * x + y * y) / 2); }
  static double A2(double x, double y) { return c * x * std::exp(-(x * x + y * y) / 2); }

  // S_1 = -Lap^A u - (1/2)(1-|u|^2) u
  static cplx S1(double x, double y) {
    const double r2 = x * x + y * y;
    const double e = std::exp(-r2 / 2);
    const cplx z(x, y);
    const cplx lap_u = z * (r2 - 4.0) * e;
    const cplx d1u = e * (cplx(1.0, 0.0) - x * z);
    const cplx d2u = e * (cplx(0.0, 1.0) - y * z);
    const cplx AdotDu = A1(x, y) * d1u + A2(x, y) * d2u;
    const double A2n = c * c * r2 * e * e;
    // div A = 0 for this choice
    const cplx lapA_u = lap_u - cplx(0, 2) * AdotDu - A2n * u(x, y);
    return -lapA_u - 0.5 * (1.0 - std::norm(u(x, y))) * u(x, y);
  }

  // S_2 = d*dA - <grad^A u, i u>
  static std::array<double, 2> S2(double x, double y) {
    const double r2 = x * x + y * y;
    const double e = std::exp(-r2 / 2);
    // F12 = c (2 - r^2) e; (d*F)_1 = d2 F12, (d*F)_2 = -d1 F12
    const double dstar1 = -c * y * e * (4.0 - r2);
    const double dstar2 = c * x * e * (4.0 - r2);
    // <grad^A u, i u> = <du, i u> - A |u|^2
    const double g1 = -y * e * e - A1(x, y) * r2 * e * e;
    const double g2 = x * e * e - A2(x, y) * r2 * e * e;
    return {dstar1 - g1, dstar2 - g2};
  }

  static FieldConfiguration sample(const Grid2& g) {
    FieldConfiguration w = FieldConfiguration::zeros(Lattice::from(g), 1.0);
    const size_t n = w.size();
    const size_t n1 = g.nodes;
    for (size_t i = 0; i < n; ++i) {
      const double x = w.lat.coord(0, static_cast<int>(i / n1));
      const double y = w.lat.coord(1, static_cast<int>(i % n1));
      w.u[i] = u(x, y);
      w.A[i] = A1(x, y);
      w.A[n + i] = A2(x, y);
    }
    return w;
  }
};

double el_oracle_error(int nodes) {
  const Grid2 g = Grid2::from_nodes(6.0, nodes);
  const FieldConfiguration w = AnalyticOracle::sample(g);
  const Perturbation s = euler_lagrange_residual(w);
  const size_t n = w.size();
  const size_t n1 = g.nodes;
  double worst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const int i0 = static_cast<int>(i / n1), i1 = static_cast<int>(i % n1);
    if (i0 < 2 || i1 < 2 || i0 > g.nodes - 3 || i1 > g.nodes - 3) continue;
    const double x = w.lat.coord(0, i0), y = w.lat.coord(1, i1);
    worst = std::max(worst, std::abs(s.phi[i] - AnalyticOracle::S1(x, y)));
    const auto s2 = AnalyticOracle::S2(x, y);
    worst = std::max(worst, std::abs(s.omega[i] - s2[0]));
    worst = std::max(worst, std::abs(s.omega[n + i] - s2[1]));
  }
  return worst;
}

}  // namespace

TEST_CASE("covariant_gradient: constant section identities") {
  const Lattice lat = Lattice::from(Grid2::from_nodes(2.0, 17));
  FieldConfiguration w = FieldConfiguration::vacuum(lat, 1.0);
  GradientField g = covariant_gradient(w);
  for (const auto& v : g.comp) CHECK(std::abs(v) == 0.0);

  const double cst = 0.7;
  for (size_t i = 0; i < w.size(); ++i) w.A[i] = cst;
  g = covariant_gradient(w);
  for (size_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(g.comp[i] - cplx(0.0, -cst)) <= 1e-14);
    CHECK(std::abs(g.comp[w.size() + i]) <= 1e-14);
  }
}

TEST_CASE("covariant_gradient: vortex annulus matches the radial formula") {
  const FieldConfiguration w = vortex_on(6.0, 193);
  const GradientField g = covariant_gradient(w);
  const RadialProfile& p = shared_profile();
  const size_t n = w.size();
  const size_t n1 = 193;
  const double h = w.lat.spacing[0];
  double worst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double x = w.lat.coord(0, static_cast<int>(i / n1));
    const double y = w.lat.coord(1, static_cast<int>(i % n1));
    const double r = std::hypot(x, y);
    if (r < 2.0 || r > 5.0) continue;
    const double magn = std::sqrt(std::norm(g.comp[i]) + std::norm(g.comp[n + i]));
    const double fp = p.fp_at(r);
    const double ang = (1.0 - p.a_at(r)) * p.f_at(r) / r;
    worst = std::max(worst, std::abs(magn - std::hypot(fp, ang)));
  }
  CHECK(worst <= 5.0 * h * h);
}

TEST_CASE("covariant_gradient: rejects non-finite input") {
  const Lattice lat = Lattice::from(Grid2::from_nodes(1.0, 9));
  FieldConfiguration w = FieldConfiguration::vacuum(lat, 1.0);
  w.u[13] = cplx(std::nan(""), 0.0);
  CHECK_THROWS_WITH_AS(covariant_gradient(w),
                       doctest::Contains("non-finite u at node 13"), ValidationError);
}

TEST_CASE("curvature: exact forms are flat") {
  const Grid2 grid = Grid2::from_nodes(4.0, 65);
  const Lattice lat = Lattice::from(grid);
  FieldConfiguration w = FieldConfiguration::vacuum(lat, 1.0);
  CurvatureField f = curvature(w);
  for (double v : f.comp) CHECK(v == 0.0);

  // A = d gamma for a smooth sampled gamma
  const auto gamma = testutil::random_scalar_field(lat, 42);
  w = gauge_transform(w, gamma);
  f = curvature(w);
  const double h = grid.spacing;
  CHECK(sup_norm_interior(lat, f.comp, 2) <= 5.0 * h * h);
}

TEST_CASE("curvature: vortex flux quantization toward 2 pi") {
  const FieldConfiguration w = vortex_on(12.0, 257);
  const CurvatureField f = curvature(w);
  const Lattice& lat = w.lat;
  const double R = 10.0;
  std::vector<int> idx(2);
  std::vector<double> x(2);
  const double flux = pairwise_sum_of(lat.size(), [&](size_t i) {
    lat.unravel(i, idx);
    lat.coords(idx, x);
    if (x[0] * x[0] + x[1] * x[1] > R * R) return 0.0;
    double wgt = lat.spacing[0] * lat.spacing[1];
    return f.comp[i] * wgt;
  });
  const double target = 2.0 * kPi * shared_profile().a_at(R);
  CHECK(std::abs(flux - target) <= 0.02);
  CHECK(std::abs(flux - 2.0 * kPi) <= 0.03);  // a(10) is 1 up to ~3e-4
}

TEST_CASE("energy: vacuum and vortex quantization") {
  const Lattice lat = Lattice::from(Grid2::from_nodes(2.0, 17));
  const FieldConfiguration vac = FieldConfiguration::vacuum(lat, 1.0);
  const EnergyBreakdown e0 = energy(vac, Region::all());
  CHECK(e0.total == 0.0);

  const FieldConfiguration w = vortex_on(20.5, 513);
  const EnergyBreakdown e =
      energy(w, Region::ball({0.0, 0.0}, 20.0));
  CHECK(std::abs(e.total - 2.0 * kPi) <= 0.005 * 2.0 * kPi);
}

TEST_CASE("energy: rescaled vortex energy is invariant") {
  const FieldConfiguration w1 = vortex_on(20.5, 513, 1.0);
  const double e1 = energy(w1, Region::ball({0.0, 0.0}, 20.0)).total;
  const Grid2 g = Grid2::from_nodes(2.05, 513);
  const FieldConfiguration w2 = sample_vortex(shared_profile(29.1), g, {0.0, 0.0}, 0.1);
  const double e2 = energy(w2, Region::ball({0.0, 0.0}, 2.0)).total;
  CHECK(std::abs(e1 - e2) <= 0.02);
}

TEST_CASE("energy: empty region is rejected") {
  const Lattice lat = Lattice::from(Grid2::from_nodes(2.0, 17));
  const FieldConfiguration vac = FieldConfiguration::vacuum(lat, 1.0);
  CHECK_THROWS_AS(energy(vac, Region::ball({100.0, 100.0}, 0.5)), ValidationError);
}

TEST_CASE("euler_lagrange_residual: vacuum is exact and vortex is O(h^2)") {
  const Lattice lat = Lattice::from(Grid2::from_nodes(2.0, 17));
  const FieldConfiguration vac = FieldConfiguration::vacuum(lat, 1.0);
  const Perturbation s0 = euler_lagrange_residual(vac);
  CHECK(sup_norm(s0) == 0.0);

  for (int nodes : {129, 257}) {
    const FieldConfiguration w = vortex_on(10.0, nodes);
    const double h = w.lat.spacing[0];
    const Perturbation s = euler_lagrange_residual(w);
    CHECK(sup_norm_interior(w.lat, s, 1) <= 3.0 * h * h);
  }
}

TEST_CASE("euler_lagrange_residual: analytic oracle with second-order convergence") {
  const double e1 = el_oracle_error(97);
  const double e2 = el_oracle_error(193);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 1.8);
  CHECK(e2 <= 0.01);
}

TEST_CASE("euler_lagrange_residual: grid too small") {
  const Lattice lat = Lattice::from(Grid2::from_nodes(1.0, 3));
  const FieldConfiguration vac = FieldConfiguration::vacuum(lat, 1.0);
  CHECK_THROWS_AS(euler_lagrange_residual(vac), ValidationError);
}

TEST_CASE("bogomolny_residual: vortex satisfies the first-order system") {
  for (int nodes : {129, 257}) {
    const FieldConfiguration w = vortex_on(10.0, nodes);
    const double h = w.lat.spacing[0];
    const BogomolnyResidual b = bogomolny_residual(w);
    CHECK(sup_norm_interior(w.lat, b.first, 1) <= 3.0 * h * h);
    CHECK(sup_norm_interior(w.lat, b.second, 1) <= 3.0 * h * h);
  }
}

TEST_CASE("bogomolny_residual: zero configuration") {
  const Lattice lat = Lattice::from(Grid2::from_nodes(2.0, 17));
  const FieldConfiguration zero = FieldConfiguration::zeros(lat, 1.0);
  const BogomolnyResidual b = bogomolny_residual(zero);
  for (double v : b.first) CHECK(v == -0.5);
  for (const auto& v : b.second) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("bogomolny_residual: rejects N-D input") {
  const GridN g = GridN::make(1, 2.0, 9, Grid2::from_nodes(2.0, 9));
  const FieldConfiguration w = FieldConfiguration::vacuum(Lattice::from(g), 1.0);
  CHECK_THROWS_AS(bogomolny_residual(w), ValidationError);
}

TEST_CASE("self-duality identity on the solved vortex") {
  const FieldConfiguration w = vortex_on(10.0, 257);
  const double h = w.lat.spacing[0];
  const CurvatureField f = curvature(w);
  std::vector<double> gap(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    const double pot = 1.0 - std::norm(w.u[i]);
    gap[i] = f.comp[i] * f.comp[i] - pot * pot / 4.0;
  }
  CHECK(sup_norm_interior(w.lat, gap, 1) <= 5.0 * h * h);
}

TEST_CASE("gauge_transform: identity, constants and energy invariance") {
  const FieldConfiguration w = vortex_on(8.0, 129);
  const size_t n = w.size();

  std::vector<double> zero(n, 0.0);
  const FieldConfiguration w0 = gauge_transform(w, zero);
  for (size_t i = 0; i < n; ++i) {
    CHECK(w0.u[i] == w.u[i]);
    CHECK(w0.A[i] == w.A[i]);
  }

  std::vector<double> cst(n, 0.9);
  const FieldConfiguration wc = gauge_transform(w, cst);
  for (size_t i = 0; i < n; i += 997) {
    CHECK(std::abs(wc.u[i] - w.u[i] * std::polar(1.0, 0.9)) <= 1e-15);
    // d(const) vanishes up to stencil roundoff
    CHECK(std::abs(wc.A[i] - w.A[i]) <= 5e-15);
    CHECK(std::abs(wc.A[n + i] - w.A[n + i]) <= 5e-15);
  }

  const auto gamma = testutil::random_scalar_field(w.lat, 7);
  const FieldConfiguration wg = gauge_transform(w, gamma);
  const Region ball = Region::ball({0.0, 0.0}, 6.0);
  const double e0 = energy(w, ball).total;
  const double eg = energy(wg, ball).total;
  const double h = w.lat.spacing[0];
  CHECK(std::abs(eg - e0) <= 20.0 * h * h);
}

TEST_CASE("coulomb_residual: identities") {
  const Grid2 grid = Grid2::from_nodes(4.0, 65);
  const Lattice lat = Lattice::from(grid);
  FieldConfiguration w = FieldConfiguration::vacuum(lat, 1.0);
  auto c = coulomb_residual(w);
  for (double v : c) CHECK(v == 0.0);

  // A = d gamma gives d*A = -Lap gamma
  const size_t n = lat.size();
  const size_t n1 = grid.nodes;
  std::vector<double> gamma(n);
  for (size_t i = 0; i < n; ++i) {
    const double x = lat.coord(0, static_cast<int>(i / n1));
    const double y = lat.coord(1, static_cast<int>(i % n1));
    gamma[i] = std::sin(x) * std::cos(0.7 * y);
  }
  w = gauge_transform(w, gamma);
  c = coulomb_residual(w);
  double worst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const int i0 = static_cast<int>(i / n1), i1 = static_cast<int>(i % n1);
    if (i0 < 2 || i1 < 2 || i0 > grid.nodes - 3 || i1 > grid.nodes - 3) continue;
    const double x = lat.coord(0, i0);
    const double y = lat.coord(1, i1);
    const double lap = -(1.0 + 0.49) * std::sin(x) * std::cos(0.7 * y);
    worst = std::max(worst, std::abs(c[i] - (-lap)));
  }
  CHECK(worst <= 5.0 * grid.spacing * grid.spacing);
}

TEST_CASE("coulomb_residual: radial vortex is in Coulomb gauge") {
  const FieldConfiguration w = vortex_on(8.0, 129);
  const double h = w.lat.spacing[0];
  CHECK(sup_norm_interior(w.lat, coulomb_residual(w), 1) <= 5.0 * h * h);
}

TEST_CASE("property: gauge invariance of the energy under refinement") {
  double prev = 0.0;
  for (int nodes : {65, 129}) {
    const Grid2 grid = Grid2::from_nodes(8.0, nodes);
    const FieldConfiguration w = sample_vortex(shared_profile(), grid, {0.0, 0.0}, 1.0);
    const auto gamma = testutil::random_scalar_field(w.lat, 99);
    const FieldConfiguration wg = gauge_transform(w, gamma);
    const Region ball = Region::ball({0.0, 0.0}, 6.0);
    const double gap = std::abs(energy(wg, ball).total - energy(w, ball).total);
    if (nodes == 65) prev = gap;
    else CHECK(gap <= prev / 2.5);  // second-order-ish decay
  }
}
