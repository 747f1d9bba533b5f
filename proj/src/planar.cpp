#include "vortexlab/planar.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "vortexlab/util.hpp"

namespace vortexlab {

namespace {

// Gradient of the penalty term lambda \int (d*A)^2 in the A slot:
// d(d*A) componentwise (factor 2 absorbed into the step).
std::vector<double> penalty_gradient(const FieldConfiguration& config) {
  const Lattice& lat = config.lat;
  const size_t n = lat.size();
  const int d = lat.dim();
  const auto& st = lat.strides();

  std::vector<double> dstar(n, 0.0);
  std::vector<int> idx(d);
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    double s = 0.0;
    for (int a = 0; a < d; ++a)
      s += stencil::d1(config.A, a * n + i, idx[a], lat.shape[a], st[a], lat.spacing[a]);
    dstar[i] = -s;
  }
  std::vector<double> out(n * d, 0.0);
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    for (int k = 0; k < d; ++k)
      out[k * n + i] = stencil::d1(dstar, i, idx[k], lat.shape[k], st[k], lat.spacing[k]);
  }
  return out;
}

// Transpose of the first-difference stencil along one axis: scatter of
// X_i into (D_a^T X)_k. Exact adjoint of the centered/one-sided scheme.
void scatter_dT(const Lattice& lat, int a, const std::vector<double>& x,
                std::vector<double>& out) {
  const auto& st = lat.strides();
  const size_t n = lat.size();
  const double h = lat.spacing[a];
  std::vector<int> idx(lat.dim());
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    const int ia = idx[a], na = lat.shape[a];
    const double v = x[i];
    if (v == 0.0) continue;
    if (ia > 0 && ia < na - 1) {
      out[i + st[a]] += v / (2 * h);
      out[i - st[a]] -= v / (2 * h);
    } else if (ia == 0) {
      out[i] += -3.0 * v / (2 * h);
      out[i + st[a]] += 4.0 * v / (2 * h);
      out[i + 2 * st[a]] += -v / (2 * h);
    } else {
      out[i] += 3.0 * v / (2 * h);
      out[i - st[a]] += -4.0 * v / (2 * h);
      out[i - 2 * st[a]] += v / (2 * h);
    }
  }
}

void scatter_dT(const Lattice& lat, int a, const std::vector<cplx>& x,
                std::vector<cplx>& out) {
  const auto& st = lat.strides();
  const size_t n = lat.size();
  const double h = lat.spacing[a];
  std::vector<int> idx(lat.dim());
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    const int ia = idx[a], na = lat.shape[a];
    const cplx v = x[i];
    if (v == cplx(0.0, 0.0)) continue;
    if (ia > 0 && ia < na - 1) {
      out[i + st[a]] += v / (2 * h);
      out[i - st[a]] -= v / (2 * h);
    } else if (ia == 0) {
      out[i] += -3.0 * v / (2 * h);
      out[i + st[a]] += 4.0 * v / (2 * h);
      out[i + 2 * st[a]] += -v / (2 * h);
    } else {
      out[i] += 3.0 * v / (2 * h);
      out[i - st[a]] += -4.0 * v / (2 * h);
      out[i - 2 * st[a]] += v / (2 * h);
    }
  }
}

// Exact gradient of the discrete augmented energy
//   E_h + lambda * sum w (d*A)^2
// with respect to the node values (trapezoidal weights included). The flow
// descends along this gradient, so the line search never fights the
// discretization mismatch of the strong-form operator.
void augmented_gradient(const FieldConfiguration& config, double lambda,
                        std::vector<cplx>& grad_u, std::vector<double>& grad_A) {
  const Lattice& lat = config.lat;
  const size_t n = lat.size();
  const int d = lat.dim();
  const auto& st = lat.strides();
  const double e2 = config.epsilon * config.epsilon;

  grad_u.assign(n, cplx(0.0, 0.0));
  grad_A.assign(n * d, 0.0);

  std::vector<double> w(n);
  std::vector<int> idx(d);
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    double t = 1.0;
    for (int a = 0; a < d; ++a) {
      t *= lat.spacing[a];
      if (idx[a] == 0 || idx[a] == lat.shape[a] - 1) t *= 0.5;
    }
    w[i] = t;
  }

  // gauged gradient components and their adjoint pushes
  std::vector<cplx> g(n);
  for (int a = 0; a < d; ++a) {
    for (size_t i = 0; i < n; ++i) {
      lat.unravel(i, idx);
      const cplx du = stencil::d1(config.u, i, idx[a], lat.shape[a], st[a], lat.spacing[a]);
      g[i] = du - cplx(0, 1) * config.A[a * n + i] * config.u[i];
    }
    // D^T part into grad_u
    std::vector<cplx> wg(n);
    for (size_t i = 0; i < n; ++i) wg[i] = 2.0 * w[i] * g[i];
    scatter_dT(lat, a, wg, grad_u);
    for (size_t i = 0; i < n; ++i) {
      // -iAu part of g and the A-slot coupling
      grad_u[i] += 2.0 * w[i] * cplx(0, 1) * config.A[a * n + i] * g[i];
      grad_A[a * n + i] -= 2.0 * w[i] * herm(cplx(0, 1) * config.u[i], g[i]);
    }
  }
  // potential
  for (size_t i = 0; i < n; ++i) {
    const double pot = 1.0 - std::norm(config.u[i]);
    grad_u[i] -= w[i] * pot * config.u[i] / e2;
  }
  // curvature: F_ab pushes into A_b via D_a^T and A_a via -D_b^T
  std::vector<double> f(n), wf(n), tmp(n, 0.0);
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      for (size_t i = 0; i < n; ++i) {
        lat.unravel(i, idx);
        const double dab =
            stencil::d1(config.A, b * n + i, idx[a], lat.shape[a], st[a], lat.spacing[a]);
        const double dba =
            stencil::d1(config.A, a * n + i, idx[b], lat.shape[b], st[b], lat.spacing[b]);
        f[i] = dab - dba;
      }
      for (size_t i = 0; i < n; ++i) wf[i] = 2.0 * e2 * w[i] * f[i];
      tmp.assign(n, 0.0);
      scatter_dT(lat, a, wf, tmp);
      for (size_t i = 0; i < n; ++i) grad_A[b * n + i] += tmp[i];
      tmp.assign(n, 0.0);
      scatter_dT(lat, b, wf, tmp);
      for (size_t i = 0; i < n; ++i) grad_A[a * n + i] -= tmp[i];
    }
  // Coulomb penalty
  std::vector<double> dstar(n);
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    double sdiv = 0.0;
    for (int a = 0; a < d; ++a)
      sdiv += stencil::d1(config.A, a * n + i, idx[a], lat.shape[a], st[a], lat.spacing[a]);
    dstar[i] = -sdiv;
  }
  for (size_t i = 0; i < n; ++i) dstar[i] *= -2.0 * lambda * w[i];
  for (int a = 0; a < d; ++a) {
    tmp.assign(n, 0.0);
    scatter_dT(lat, a, dstar, tmp);
    for (size_t i = 0; i < n; ++i) grad_A[a * n + i] += tmp[i];
  }
}

double augmented_energy_checked(const FieldConfiguration& config, double lambda) {
  const EnergyBreakdown e = energy(config, Region::all());
  const auto dstar = coulomb_residual(config);
  const Lattice& lat = config.lat;
  std::vector<int> idx(lat.dim());
  const double pen = pairwise_sum_of(lat.size(), [&](size_t i) {
    lat.unravel(i, idx);
    double w = 1.0;
    for (int a = 0; a < lat.dim(); ++a) {
      w *= lat.spacing[a];
      if (idx[a] == 0 || idx[a] == lat.shape[a] - 1) w *= 0.5;
    }
    return w * dstar[i] * dstar[i];
  });
  return e.total + lambda * pen;
}

// +inf for non-finite trial states so the line search simply rejects them
double augmented_energy(const FieldConfiguration& config, double lambda) {
  for (const auto& v : config.u)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      return std::numeric_limits<double>::infinity();
  for (double v : config.A)
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
  return augmented_energy_checked(config, lambda);
}

bool is_boundary(const Lattice& lat, size_t i) {
  std::vector<int> idx(lat.dim());
  lat.unravel(i, idx);
  for (int a = 0; a < lat.dim(); ++a)
    if (idx[a] == 0 || idx[a] == lat.shape[a] - 1) return true;
  return false;
}

}  // namespace

std::pair<FieldConfiguration, ConvergenceReport> solve_planar(
    double epsilon, const Grid2& grid, const FieldConfiguration& init,
    const SolveSettings& settings, const RadialProfile* profile) {
  const auto t0 = std::chrono::steady_clock::now();
  if (epsilon <= 0.0) throw ValidationError("solve_planar: epsilon must be positive");
  const Lattice lat = Lattice::from(grid);
  if (!lat.same_layout(init.lat)) throw ValidationError("solve_planar: init not on grid");
  init.validate();

  FieldConfiguration w = init;
  w.epsilon = epsilon;
  const size_t n = lat.size();

  // impose boundary data
  if (settings.boundary == SolveSettings::BoundaryMode::VortexTrace) {
    if (profile == nullptr)
      throw ValidationError("solve_planar: vortex-trace boundary mode needs a profile");
    const FieldConfiguration trace = sample_vortex(*profile, grid, settings.vortex_center, epsilon);
    for (size_t i = 0; i < n; ++i) {
      if (!is_boundary(lat, i)) continue;
      w.u[i] = trace.u[i];
      for (int c = 0; c < 2; ++c) w.A[c * n + i] = trace.A[c * n + i];
    }
  } else if (settings.boundary == SolveSettings::BoundaryMode::Vacuum) {
    for (size_t i = 0; i < n; ++i) {
      if (!is_boundary(lat, i)) continue;
      w.u[i] = cplx(1.0, 0.0);
      for (int c = 0; c < 2; ++c) w.A[c * n + i] = 0.0;
    }
  }  // Provided: keep init boundary

  const double lambda = settings.gauge_fix_weight;
  ConvergenceReport report;

  auto residual_sups = [&](const FieldConfiguration& cfg, Perturbation& S) {
    S = euler_lagrange_residual(cfg);
    const auto coul = coulomb_residual(cfg);
    report.el_residual_sup = sup_norm_interior(lat, S, 1);
    report.coulomb_residual_sup = sup_norm_interior(lat, coul, 1);
  };

  Perturbation S;
  residual_sups(w, S);

  double phi_now = augmented_energy(w, lambda);
  double step = settings.step0 > 0.0
                    ? settings.step0
                    : 0.2 * grid.spacing * grid.spacing / std::max(1.0, epsilon * epsilon);
  int stagnant = 0;
  // Two descent phases: the strong-form direction -(S, S_2 + lambda d d*A)
  // is the continuum gradient and converges fast; once the line search can
  // no longer decrease the energy along it (the O(h^2) consistency mismatch
  // with the discrete functional), switch to the exact gradient of the
  // discrete augmented energy, which descends to the floor.
  bool exact_phase = false;
  std::vector<cplx> gu;
  std::vector<double> ga;
  const double cell = grid.spacing * grid.spacing;

  while (report.iterations < settings.max_iterations &&
         (report.el_residual_sup > settings.tolerance ||
          report.coulomb_residual_sup > settings.tolerance)) {
    Perturbation dir = Perturbation::zeros(lat);
    double dir_norm_sq = 0.0;
    if (!exact_phase) {
      const auto pen = penalty_gradient(w);
      for (size_t i = 0; i < n; ++i) {
        if (is_boundary(lat, i)) continue;
        dir.phi[i] = -S.phi[i];
        dir_norm_sq += std::norm(S.phi[i]);
        for (int c = 0; c < 2; ++c) {
          const double g = S.omega[c * n + i] + lambda * pen[c * n + i];
          dir.omega[c * n + i] = -g;
          dir_norm_sq += epsilon * epsilon * g * g;
        }
      }
    } else {
      augmented_gradient(w, lambda, gu, ga);
      for (size_t i = 0; i < n; ++i) {
        if (is_boundary(lat, i)) continue;
        dir.phi[i] = -gu[i] / cell;
        dir_norm_sq += std::norm(dir.phi[i]);
        for (int c = 0; c < 2; ++c) {
          const double v = -ga[c * n + i] / (cell * epsilon * epsilon);
          dir.omega[c * n + i] = v;
          dir_norm_sq += epsilon * epsilon * v * v;
        }
      }
    }
    dir_norm_sq *= cell;

    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      FieldConfiguration trial = w;
      for (size_t i = 0; i < n; ++i) {
        trial.u[i] += step * dir.phi[i];
        for (int c = 0; c < 2; ++c) trial.A[c * n + i] += step * dir.omega[c * n + i];
      }
      const double phi_trial = augmented_energy(trial, lambda);
      if (phi_trial <= phi_now - 1e-4 * step * dir_norm_sq) {
        w = std::move(trial);
        phi_now = phi_trial;
        accepted = true;
        ++report.iterations;
        stagnant = 0;
        if (settings.backtracking && bt == 0) step *= 1.25;
        break;
      }
      if (!settings.backtracking) {
        // fixed step rule: count the non-decrease; never adopt a non-finite
        // state
        if (std::isfinite(phi_trial)) {
          w = std::move(trial);
          phi_now = phi_trial;
        }
        accepted = true;
        ++report.iterations;
        ++stagnant;
        break;
      }
      step *= 0.5;
      ++report.rejected_steps;
      if (step < 1e-16) break;
    }
    if (!accepted) {
      if (!exact_phase) {
        exact_phase = true;
        step = 0.05 * cell * epsilon * epsilon;
      } else {
        ++stagnant;
      }
    }
    if (settings.coulomb_project_every > 0 && accepted &&
        report.iterations % settings.coulomb_project_every == 0) {
      w = project_coulomb(w, /*enforce_normal_boundary=*/false);
      phi_now = augmented_energy(w, lambda);
    }
    if (stagnant > settings.stagnation_limit) {
      report.status = "stagnation";
      report.energy = energy(w, Region::all());
      report.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      throw NumericalError("solve_planar: stagnation (" +
                           std::to_string(settings.stagnation_limit) +
                           " consecutive steps without energy decrease)");
    }
    residual_sups(w, S);
  }

  report.converged = report.el_residual_sup <= settings.tolerance &&
                     report.coulomb_residual_sup <= settings.tolerance;
  report.status = report.converged ? "converged" : "not converged";
  if (report.converged) {
    // restore the gauge condition at the end
    w = project_coulomb(w, /*enforce_normal_boundary=*/false);
    residual_sups(w, S);
  }
  report.energy = energy(w, Region::all());
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!report.converged)
    throw NumericalError("solve_planar: not converged after " +
                         std::to_string(report.iterations) + " iterations (EL sup " +
                         std::to_string(report.el_residual_sup) + ")");
  return {std::move(w), report};
}

FieldConfiguration project_coulomb(const FieldConfiguration& config,
                                   bool enforce_normal_boundary, double cg_tol,
                                   int cg_max_iter) {
  config.validate();
  const Lattice& lat = config.lat;
  const size_t n = lat.size();
  const int d = lat.dim();
  const auto& st = lat.strides();

  // Finite-volume Neumann problem: Lap gamma = div A, dgamma/dnu = A(nu).
  // Cell volumes are the trapezoidal weights; boundary flux data moves to
  // the right-hand side. The system is compatible after removing the mean.
  std::vector<int> idx(d);
  std::vector<double> vol(n, 0.0);
  std::vector<double> rhs(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      w *= lat.spacing[a];
      if (idx[a] == 0 || idx[a] == lat.shape[a] - 1) w *= 0.5;
    }
    vol[i] = w;
  }

  // rhs = face flux integral of A per cell. With the prescribed
  // dgamma/dnu = A(nu) the domain-face fluxes cancel against the data, so
  // only interior faces enter; with homogeneous data the domain-face fluxes
  // of A stay on the right-hand side.
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    for (int a = 0; a < d; ++a) {
      double area = 1.0;
      for (int b = 0; b < d; ++b) {
        if (b == a) continue;
        area *= lat.spacing[b];
        if (idx[b] == 0 || idx[b] == lat.shape[b] - 1) area *= 0.5;
      }
      if (idx[a] + 1 < lat.shape[a]) {
        const size_t j = i + st[a];
        const double flux = 0.5 * (config.A[a * n + i] + config.A[a * n + j]) * area;
        rhs[i] += flux;
        rhs[j] -= flux;
      }
      if (!enforce_normal_boundary) {
        if (idx[a] == 0) rhs[i] -= config.A[a * n + i] * area;
        if (idx[a] == lat.shape[a] - 1) rhs[i] += config.A[a * n + i] * area;
      }
    }
  }

  // matrix-free FV Neumann Laplacian action: (L g)_i = sum_faces (g_nb - g)/h * area
  auto apply_lap = [&](const std::vector<double>& g, std::vector<double>& out) {
    parallel_for(n, [&](size_t lo, size_t hi) {
      std::vector<int> id(d);
      for (size_t i = lo; i < hi; ++i) {
        lat.unravel(i, id);
        double acc = 0.0;
        for (int a = 0; a < d; ++a) {
          const double h = lat.spacing[a];
          double area = 1.0;
          for (int b = 0; b < d; ++b) {
            if (b == a) continue;
            area *= lat.spacing[b];
            if (id[b] == 0 || id[b] == lat.shape[b] - 1) area *= 0.5;
          }
          if (id[a] + 1 < lat.shape[a]) acc += area * (g[i + st[a]] - g[i]) / h;
          if (id[a] - 1 >= 0) acc += area * (g[i - st[a]] - g[i]) / h;
        }
        out[i] = acc;
      }
    });
  };

  // Solve M gamma = b with M = -Lap (SPD on mean-zero functions), b = -rhs.
  std::vector<double> b(n);
  for (size_t i = 0; i < n; ++i) b[i] = -rhs[i];
  const double vtot = pairwise_sum_of(n, [&](size_t i) { return vol[i]; });
  const double bmean = pairwise_sum_of(n, [&](size_t i) { return b[i]; }) / vtot;
  for (size_t i = 0; i < n; ++i) b[i] -= bmean * vol[i];

  std::vector<double> gamma(n, 0.0), res(b), p(b), mp(n);
  double rho = pairwise_sum_of(n, [&](size_t i) { return res[i] * res[i]; });
  const double b_norm = std::sqrt(rho);
  const double stop = std::max(cg_tol * b_norm, 1e-300);
  int it = 0;
  while (std::sqrt(rho) > stop && it < cg_max_iter) {
    apply_lap(p, mp);
    for (size_t i = 0; i < n; ++i) mp[i] = -mp[i];
    const double pmp = pairwise_sum_of(n, [&](size_t i) { return p[i] * mp[i]; });
    if (pmp <= 0.0) break;
    const double alpha = rho / pmp;
    for (size_t i = 0; i < n; ++i) {
      gamma[i] += alpha * p[i];
      res[i] -= alpha * mp[i];
    }
    const double rho_new = pairwise_sum_of(n, [&](size_t i) { return res[i] * res[i]; });
    const double beta = rho_new / rho;
    rho = rho_new;
    for (size_t i = 0; i < n; ++i) p[i] = res[i] + beta * p[i];
    ++it;
  }
  if (it >= cg_max_iter && std::sqrt(rho) > 100.0 * stop)
    throw NumericalError("project_coulomb: Poisson solve did not converge");

  // gamma is defined up to a constant; pin the weighted mean to zero
  const double gmean = pairwise_sum_of(n, [&](size_t i) { return gamma[i] * vol[i]; }) / vtot;
  std::vector<double> minus_gamma(n);
  for (size_t i = 0; i < n; ++i) minus_gamma[i] = -(gamma[i] - gmean);
  return gauge_transform(config, minus_gamma);
}

}  // namespace vortexlab
