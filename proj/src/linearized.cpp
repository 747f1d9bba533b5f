#include "vortexlab/linearized.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <random>

#include "vortexlab/fields_ops.hpp"
#include "vortexlab/util.hpp"

namespace vortexlab {

namespace {

struct StencilRow {
  // accumulates (col, coeff) entries of one matrix row
  std::vector<Eigen::Triplet<double>>* trip;
  long row;
  void add(size_t col, double v) {
    if (v != 0.0) trip->emplace_back(row, static_cast<long>(col), v);
  }
};

// adds the 1D second-derivative stencil along axis a at node i to a row,
// mapping value-column offsets through `col(node)`.
template <typename ColFn>
void add_d2(StencilRow& row, const Lattice& lat, size_t i, const std::vector<int>& idx, int a,
            double scale, ColFn col) {
  const auto& st = lat.strides();
  const double h2 = lat.spacing[a] * lat.spacing[a];
  const int ia = idx[a], na = lat.shape[a];
  if (ia > 0 && ia < na - 1) {
    row.add(col(i + st[a]), scale / h2);
    row.add(col(i), -2.0 * scale / h2);
    row.add(col(i - st[a]), scale / h2);
  } else if (ia == 0) {
    row.add(col(i), 2.0 * scale / h2);
    row.add(col(i + st[a]), -5.0 * scale / h2);
    row.add(col(i + 2 * st[a]), 4.0 * scale / h2);
    row.add(col(i + 3 * st[a]), -scale / h2);
  } else {
    row.add(col(i), 2.0 * scale / h2);
    row.add(col(i - st[a]), -5.0 * scale / h2);
    row.add(col(i - 2 * st[a]), 4.0 * scale / h2);
    row.add(col(i - 3 * st[a]), -scale / h2);
  }
}

template <typename ColFn>
void add_d1(StencilRow& row, const Lattice& lat, size_t i, const std::vector<int>& idx, int a,
            double scale, ColFn col) {
  const auto& st = lat.strides();
  const double h = lat.spacing[a];
  const int ia = idx[a], na = lat.shape[a];
  if (ia > 0 && ia < na - 1) {
    row.add(col(i + st[a]), scale / (2 * h));
    row.add(col(i - st[a]), -scale / (2 * h));
  } else if (ia == 0) {
    row.add(col(i), -3.0 * scale / (2 * h));
    row.add(col(i + st[a]), 4.0 * scale / (2 * h));
    row.add(col(i + 2 * st[a]), -scale / (2 * h));
  } else {
    row.add(col(i), 3.0 * scale / (2 * h));
    row.add(col(i - st[a]), -4.0 * scale / (2 * h));
    row.add(col(i - 2 * st[a]), scale / (2 * h));
  }
}

}  // namespace

Eigen::VectorXd LinearizedSystem::pack(const Perturbation& p) const {
  const size_t n = nodes();
  const int d = base.lat.dim();
  Eigen::VectorXd v(static_cast<long>((2 + d) * n));
  for (size_t i = 0; i < n; ++i) {
    v[static_cast<long>(i)] = p.phi[i].real();
    v[static_cast<long>(n + i)] = p.phi[i].imag();
  }
  for (int c = 0; c < d; ++c)
    for (size_t i = 0; i < n; ++i)
      v[static_cast<long>((2 + c) * n + i)] = p.omega[c * n + i];
  return v;
}

Perturbation LinearizedSystem::unpack(const Eigen::VectorXd& v) const {
  const size_t n = nodes();
  const int d = base.lat.dim();
  Perturbation p = Perturbation::zeros(base.lat);
  for (size_t i = 0; i < n; ++i)
    p.phi[i] = cplx(v[static_cast<long>(i)], v[static_cast<long>(n + i)]);
  for (int c = 0; c < d; ++c)
    for (size_t i = 0; i < n; ++i)
      p.omega[c * n + i] = v[static_cast<long>((2 + c) * n + i)];
  return p;
}

Perturbation LinearizedSystem::apply_L(const Perturbation& p) const {
  return unpack(L * pack(p));
}

Perturbation LinearizedSystem::apply_Theta(const std::vector<double>& gamma) const {
  Eigen::VectorXd g(static_cast<long>(gamma.size()));
  for (size_t i = 0; i < gamma.size(); ++i) g[static_cast<long>(i)] = gamma[i];
  return unpack(Theta * g);
}

std::vector<double> LinearizedSystem::apply_ThetaStar(const Perturbation& p) const {
  Eigen::VectorXd v = ThetaStar * pack(p);
  std::vector<double> out(v.size());
  for (long i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

LinearizedSystem assemble(const FieldConfiguration& base) {
  base.validate();
  const Lattice& lat = base.lat;
  const size_t n = lat.size();
  const int d = lat.dim();
  const auto& st = lat.strides();
  const double e2 = base.epsilon * base.epsilon;

  LinearizedSystem sys;
  sys.base = base;

  const GradientField grad = covariant_gradient(base);

  // div A at every node (one-sided at the boundary)
  std::vector<double> divA(n, 0.0);
  {
    std::vector<int> idx(d);
    for (size_t i = 0; i < n; ++i) {
      lat.unravel(i, idx);
      double s = 0.0;
      for (int a = 0; a < d; ++a)
        s += stencil::d1(base.A, a * n + i, idx[a], lat.shape[a], st[a], lat.spacing[a]);
      divA[i] = s;
    }
  }

  const long ndof = static_cast<long>((2 + d) * n);
  std::vector<Eigen::Triplet<double>> tl, tth, tts;
  tl.reserve(n * (4 * d + 10));
  tth.reserve(n * (2 + 2 * d));
  tts.reserve(n * (2 + 2 * d));

  std::vector<int> idx(d);
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    bool boundary = false;
    for (int a = 0; a < d; ++a)
      if (idx[a] == 0 || idx[a] == lat.shape[a] - 1) boundary = true;

    const double ur = base.u[i].real(), ui = base.u[i].imag();
    const double u2 = ur * ur + ui * ui;

    // Theta: (i u gamma, d gamma)
    {
      StencilRow rp{&tth, static_cast<long>(i)};
      rp.add(i, -ui);
      StencilRow rq{&tth, static_cast<long>(n + i)};
      rq.add(i, ur);
      for (int c = 0; c < d; ++c) {
        StencilRow rw{&tth, static_cast<long>((2 + c) * n + i)};
        add_d1(rw, lat, i, idx, c, 1.0, [&](size_t j) { return j; });
      }
    }
    // Theta*: -ui*p + ur*q - e^2 sum_c d_c omega_c
    {
      StencilRow rg{&tts, static_cast<long>(i)};
      rg.add(i, -ui);
      rg.add(n + i, ur);
      for (int c = 0; c < d; ++c)
        add_d1(rg, lat, i, idx, c, -e2, [&](size_t j) { return (2 + c) * n + j; });
    }

    if (boundary) continue;  // homogeneous Dirichlet rows of L stay zero

    const double m = -0.5 * (1.0 - 3.0 * u2);
    double a2 = 0.0;
    for (int c = 0; c < d; ++c) a2 += base.A[c * n + i] * base.A[c * n + i];

    // Re phi row
    {
      StencilRow r{&tl, static_cast<long>(i)};
      for (int a = 0; a < d; ++a) add_d2(r, lat, i, idx, a, -e2, [&](size_t j) { return j; });
      for (int a = 0; a < d; ++a)
        add_d1(r, lat, i, idx, a, -2.0 * e2 * base.A[a * n + i],
               [&](size_t j) { return n + j; });
      r.add(n + i, -e2 * divA[i]);
      r.add(i, e2 * a2 + m);
      for (int c = 0; c < d; ++c)
        r.add((2 + c) * n + i, -2.0 * e2 * grad.comp[c * n + i].imag());
    }
    // Im phi row
    {
      StencilRow r{&tl, static_cast<long>(n + i)};
      for (int a = 0; a < d; ++a)
        add_d2(r, lat, i, idx, a, -e2, [&](size_t j) { return n + j; });
      for (int a = 0; a < d; ++a)
        add_d1(r, lat, i, idx, a, 2.0 * e2 * base.A[a * n + i], [&](size_t j) { return j; });
      r.add(i, e2 * divA[i]);
      r.add(n + i, e2 * a2 + m);
      for (int c = 0; c < d; ++c)
        r.add((2 + c) * n + i, 2.0 * e2 * grad.comp[c * n + i].real());
    }
    // omega rows
    for (int c = 0; c < d; ++c) {
      StencilRow r{&tl, static_cast<long>((2 + c) * n + i)};
      for (int a = 0; a < d; ++a)
        add_d2(r, lat, i, idx, a, -e2, [&](size_t j) { return (2 + c) * n + j; });
      r.add((2 + c) * n + i, u2);
      r.add(i, -2.0 * grad.comp[c * n + i].imag());
      r.add(n + i, 2.0 * grad.comp[c * n + i].real());
    }
  }

  sys.L.resize(ndof, ndof);
  sys.L.setFromTriplets(tl.begin(), tl.end());
  sys.Theta.resize(ndof, static_cast<long>(n));
  sys.Theta.setFromTriplets(tth.begin(), tth.end());
  sys.ThetaStar.resize(static_cast<long>(n), ndof);
  sys.ThetaStar.setFromTriplets(tts.begin(), tts.end());
  return sys;
}

std::pair<Perturbation, Perturbation> translational_zero_modes(
    const RadialProfile& profile, const Grid2& grid, std::array<double, 2> center) {
  grid.validate();
  const Lattice lat = Lattice::from(grid);
  const size_t n = lat.size();
  Perturbation v1 = Perturbation::zeros(lat);
  Perturbation v2 = Perturbation::zeros(lat);
  const size_t n1 = lat.shape[1];
  for (size_t i = 0; i < n; ++i) {
    const double z1 = lat.coord(0, static_cast<int>(i / n1)) - center[0];
    const double z2 = lat.coord(1, static_cast<int>(i % n1)) - center[1];
    const double rho = std::hypot(z1, z2);
    const double fp = profile.fp_at(rho);
    const double apr = profile.ap_over_r(rho);
    v1.phi[i] = cplx(fp, 0.0);
    v1.omega[n + i] = apr;  // (a'/r) dz^2
    v2.phi[i] = cplx(0.0, fp);
    v2.omega[i] = -apr;  // -(a'/r) dz^1
  }
  return {std::move(v1), std::move(v2)};
}

namespace {

double inner_eps_interior(const Lattice& lat, double eps, const Perturbation& p,
                          const Perturbation& q, int margin) {
  const size_t n = lat.size();
  const int d = lat.dim();
  const double e2 = eps * eps;
  double cell = 1.0;
  for (int a = 0; a < d; ++a) cell *= lat.spacing[a];
  std::vector<int> idx(d);
  return pairwise_sum_of(n, [&](size_t i) {
    lat.unravel(i, idx);
    for (int a = 0; a < d; ++a)
      if (idx[a] < margin || idx[a] > lat.shape[a] - 1 - margin) return 0.0;
    double v = herm(p.phi[i], q.phi[i]);
    for (int c = 0; c < d; ++c) v += e2 * p.omega[c * n + i] * q.omega[c * n + i];
    return v * cell;
  });
}

}  // namespace

DecompositionCheck decomposition_check(const LinearizedSystem& system, const Perturbation& p,
                                       double delta) {
  if (delta < 1e-7 || delta > 1e-2)
    throw ValidationError("decomposition_check: delta must lie in [1e-7, 1e-2]");
  const Lattice& lat = system.base.lat;
  const size_t n = lat.size();
  const int d = lat.dim();

  auto shifted = [&](double s) {
    FieldConfiguration w = system.base;
    for (size_t i = 0; i < n; ++i) {
      w.u[i] += s * p.phi[i];
      for (int c = 0; c < d; ++c) w.A[c * n + i] += s * p.omega[c * n + i];
    }
    return euler_lagrange_residual(w);
  };
  const Perturbation sp = shifted(delta);
  const Perturbation sm = shifted(-delta);
  Perturbation sprime = Perturbation::zeros(lat);
  for (size_t i = 0; i < n; ++i) {
    sprime.phi[i] = (sp.phi[i] - sm.phi[i]) / (2.0 * delta);
    for (int c = 0; c < d; ++c)
      sprime.omega[c * n + i] = (sp.omega[c * n + i] - sm.omega[c * n + i]) / (2.0 * delta);
  }

  const Perturbation lp = system.apply_L(p);
  const Perturbation ttp = system.apply_Theta(system.apply_ThetaStar(p));
  Perturbation lmt = Perturbation::zeros(lat);
  Perturbation diff = Perturbation::zeros(lat);
  for (size_t i = 0; i < n; ++i) {
    lmt.phi[i] = lp.phi[i] - ttp.phi[i];
    diff.phi[i] = sprime.phi[i] - lmt.phi[i];
    for (int c = 0; c < d; ++c) {
      lmt.omega[c * n + i] = lp.omega[c * n + i] - ttp.omega[c * n + i];
      diff.omega[c * n + i] = sprime.omega[c * n + i] - lmt.omega[c * n + i];
    }
  }

  DecompositionCheck out;
  const double eps = system.base.epsilon;
  // interior margin 2: the boundary rows of L are Dirichlet while the
  // differentiated operator uses one-sided stencils there
  out.s_prime_norm = std::sqrt(inner_eps_interior(lat, eps, sprime, sprime, 2));
  out.l_minus_tt_norm = std::sqrt(inner_eps_interior(lat, eps, lmt, lmt, 2));
  const double dn = std::sqrt(inner_eps_interior(lat, eps, diff, diff, 2));
  out.discrepancy_rel = dn / std::max(1e-300, std::max(out.s_prime_norm, out.l_minus_tt_norm));
  return out;
}

RitzReport smallest_ritz_values(const LinearizedSystem& system,
                                const std::pair<Perturbation, Perturbation>& deflate, int k,
                                double rel_tol, uint64_t seed) {
  const Lattice& lat = system.base.lat;
  const size_t n = lat.size();
  const int d = lat.dim();
  const int nb = 2 + d;
  const double e2 = system.base.epsilon * system.base.epsilon;

  // interior node list (margin 1: Dirichlet boundary dofs dropped)
  std::vector<long> node_map(n, -1);
  std::vector<size_t> interior;
  {
    std::vector<int> idx(d);
    for (size_t i = 0; i < n; ++i) {
      lat.unravel(i, idx);
      bool in = true;
      for (int a = 0; a < d; ++a)
        if (idx[a] == 0 || idx[a] == lat.shape[a] - 1) in = false;
      if (in) {
        node_map[i] = static_cast<long>(interior.size());
        interior.push_back(i);
      }
    }
  }
  const long ni = static_cast<long>(interior.size());
  const long ndof_i = static_cast<long>(nb) * ni;

  auto dof_map = [&](long full_dof) -> long {
    const size_t node = static_cast<size_t>(full_dof) % n;
    const long blk = full_dof / static_cast<long>(n);
    const long m = node_map[node];
    return m < 0 ? -1 : blk * ni + m;
  };

  // restrict L and ThetaStar to interior dofs / interior gamma nodes
  std::vector<Eigen::Triplet<double>> tL, tG;
  for (long col = 0; col < system.L.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(system.L, col); it; ++it) {
      const long r = dof_map(it.row());
      const long c = dof_map(it.col());
      if (r >= 0 && c >= 0) tL.emplace_back(r, c, it.value());
    }
  for (long col = 0; col < system.ThetaStar.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(system.ThetaStar, col); it; ++it) {
      const long r = node_map[static_cast<size_t>(it.row())];
      const long c = dof_map(it.col());
      if (r >= 0 && c >= 0) tG.emplace_back(r, c, it.value());
    }
  Eigen::SparseMatrix<double> Li(ndof_i, ndof_i), G(ni, ndof_i);
  Li.setFromTriplets(tL.begin(), tL.end());
  G.setFromTriplets(tG.begin(), tG.end());

  // diagonal mass: 1 on phi blocks, eps^2 on omega blocks
  Eigen::VectorXd mdiag(ndof_i);
  for (int b = 0; b < nb; ++b)
    for (long i = 0; i < ni; ++i) mdiag[b * ni + i] = b < 2 ? 1.0 : e2;

  Eigen::SparseMatrix<double> M(ndof_i, ndof_i);
  {
    std::vector<Eigen::Triplet<double>> tm;
    for (long i = 0; i < ndof_i; ++i) tm.emplace_back(i, i, mdiag[i]);
    M.setFromTriplets(tm.begin(), tm.end());
  }

  Eigen::SparseMatrix<double> ML = M * Li;
  Eigen::SparseMatrix<double> MLt = Eigen::SparseMatrix<double>(ML.transpose());
  Eigen::SparseMatrix<double> B = 0.5 * (ML + MLt);

  // gauge projector: x -> x - M^-1 G^T (G M^-1 G^T)^-1 G x
  Eigen::SparseMatrix<double> Gt = Eigen::SparseMatrix<double>(G.transpose());
  Eigen::SparseMatrix<double> Minv(ndof_i, ndof_i);
  {
    std::vector<Eigen::Triplet<double>> tm;
    for (long i = 0; i < ndof_i; ++i) tm.emplace_back(i, i, 1.0 / mdiag[i]);
    Minv.setFromTriplets(tm.begin(), tm.end());
  }
  Eigen::SparseMatrix<double> Sg = G * Minv * Gt;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> gauge_solver;
  gauge_solver.compute(Sg);
  if (gauge_solver.info() != Eigen::Success)
    throw NumericalError("ritz: gauge Schur complement factorization failed");

  auto project = [&](Eigen::VectorXd& x) {
    const Eigen::VectorXd gx = G * x;
    const Eigen::VectorXd z = gauge_solver.solve(gx);
    x -= Minv * (Gt * z);
  };

  // deflation basis: packed translational modes restricted to interior
  auto restrict_pert = [&](const Perturbation& p) {
    Eigen::VectorXd full = system.pack(p);
    Eigen::VectorXd v(ndof_i);
    for (int b = 0; b < nb; ++b)
      for (long i = 0; i < ni; ++i)
        v[b * ni + i] = full[static_cast<long>(b) * static_cast<long>(n) +
                             static_cast<long>(interior[static_cast<size_t>(i)])];
    return v;
  };
  std::vector<Eigen::VectorXd> defl;
  for (const Perturbation* p : {&deflate.first, &deflate.second}) {
    Eigen::VectorXd v = restrict_pert(*p);
    for (const auto& w : defl) v -= w * (w.dot(M * v));
    const double nm = std::sqrt(v.dot(M * v));
    if (nm > 1e-12) defl.push_back(v / nm);
  }
  auto deflate_vec = [&](Eigen::VectorXd& x) {
    for (const auto& w : defl) x -= w * (w.dot(M * x));
  };

  // shifted solve operator
  const double sigma = 0.5;
  Eigen::SparseMatrix<double> K = B + sigma * M;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ksolver;
  ksolver.compute(K);
  if (ksolver.info() != Eigen::Success)
    throw NumericalError("ritz: shifted operator factorization failed");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> X(k, Eigen::VectorXd(ndof_i));
  for (auto& x : X) {
    for (long i = 0; i < ndof_i; ++i) x[i] = gauss(rng);
    project(x);
    deflate_vec(x);
  }

  RitzReport report;
  std::vector<double> prev(k, 1e300);
  for (int it = 0; it < 200; ++it) {
    for (auto& x : X) {
      Eigen::VectorXd y = ksolver.solve(M * x);
      project(y);
      deflate_vec(y);
      x = y;
    }
    // M-orthonormalize
    for (int j = 0; j < k; ++j) {
      for (int l = 0; l < j; ++l) X[j] -= X[l] * (X[l].dot(M * X[j]));
      const double nm = std::sqrt(X[j].dot(M * X[j]));
      if (nm < 1e-14) {
        for (long i = 0; i < ndof_i; ++i) X[j][i] = gauss(rng);
        project(X[j]);
        deflate_vec(X[j]);
        const double nm2 = std::sqrt(X[j].dot(M * X[j]));
        X[j] /= nm2;
      } else {
        X[j] /= nm;
      }
    }
    // Ritz values of the small projected block
    Eigen::MatrixXd T(k, k);
    std::vector<Eigen::VectorXd> BX(k);
    for (int j = 0; j < k; ++j) BX[j] = B * X[j];
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) T(r, c) = X[r].dot(BX[c]);
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::MatrixXd V = es.eigenvectors();
    std::vector<Eigen::VectorXd> Xn(k, Eigen::VectorXd::Zero(ndof_i));
    for (int j = 0; j < k; ++j)
      for (int l = 0; l < k; ++l) Xn[j] += X[l] * V(l, j);
    X = std::move(Xn);

    report.iterations = it + 1;
    bool done = true;
    for (int j = 0; j < k; ++j) {
      const double lam = es.eigenvalues()[j];
      if (std::abs(lam - prev[j]) > rel_tol * (1.0 + std::abs(lam))) done = false;
      prev[j] = lam;
    }
    if (done && it >= 3) break;
  }

  report.values.assign(prev.begin(), prev.end());
  report.residuals.resize(k);
  for (int j = 0; j < k; ++j) {
    const Eigen::VectorXd r = B * X[j] - prev[j] * (M * X[j]);
    report.residuals[j] = r.norm() / std::max(1e-300, std::sqrt(X[j].dot(M * X[j])));
  }
  return report;
}

}  // namespace vortexlab
