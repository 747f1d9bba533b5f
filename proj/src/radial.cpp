#include "vortexlab/radial.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "vortexlab/util.hpp"

namespace vortexlab {

namespace {

constexpr double kSeriesStart = 1e-4;
constexpr double kMatchRadius = 14.0;   // tail matched here
constexpr double kBlendWidth = 2.0;     // shot -> tail blend window

struct State {
  double f, a;
};

State rhs(double r, const State& y) {
  return {(1.0 - y.a) * y.f / r, r * (1.0 - y.f * y.f) / 2.0};
}

State series_launch(double alpha, double r) {
  State y;
  y.f = alpha * r * (1.0 - r * r / 8.0);
  y.a = r * r / 4.0 - alpha * alpha * r * r * r * r / 8.0;
  return y;
}

enum class Shot { Under, Over, NoEvent };

// One Dormand-Prince RK5(4) step; returns the 5th-order solution and an
// error estimate.
State dp_step(double r, const State& y, double h, double& err) {
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  auto add = [](const State& y0, std::initializer_list<std::pair<double, State>> terms,
                double h) {
    State out = y0;
    for (const auto& [w, k] : terms) {
      out.f += h * w * k.f;
      out.a += h * w * k.a;
    }
    return out;
  };

  const State k1 = rhs(r, y);
  const State k2 = rhs(r + c2 * h, add(y, {{a21, k1}}, h));
  const State k3 = rhs(r + c3 * h, add(y, {{a31, k1}, {a32, k2}}, h));
  const State k4 = rhs(r + c4 * h, add(y, {{a41, k1}, {a42, k2}, {a43, k3}}, h));
  const State k5 = rhs(r + c5 * h, add(y, {{a51, k1}, {a52, k2}, {a53, k3}, {a54, k4}}, h));
  const State k6 =
      rhs(r + h, add(y, {{a61, k1}, {a62, k2}, {a63, k3}, {a64, k4}, {a65, k5}}, h));
  const State y5 = add(y, {{b1, k1}, {b3, k3}, {b4, k4}, {b5, k5}, {b6, k6}}, h);
  const State k7 = rhs(r + h, y5);

  const double ef = h * (e1 * k1.f + e3 * k3.f + e4 * k4.f + e5 * k5.f + e6 * k6.f + e7 * k7.f);
  const double ea = h * (e1 * k1.a + e3 * k3.a + e4 * k4.a + e5 * k5.a + e6 * k6.a + e7 * k7.a);
  err = std::max(std::abs(ef), std::abs(ea));
  return y5;
}

// Adaptive integration from (r0, y0) to r1 with a hard step cap (keeps the
// classification and dense runs on identical step sequences). Output nodes in
// `out_r` are filled by cubic Hermite interpolation inside accepted steps.
// Returns the classification event if one fires.
Shot integrate(double alpha, double r0, State y0, double r1,
               const std::vector<double>* out_r, std::vector<State>* out_y,
               double* r_event = nullptr) {
  (void)alpha;
  constexpr double rtol = 1e-11, atol = 1e-13, hcap = 0.002;
  double r = r0;
  State y = y0;
  double h = 1e-4;
  size_t next_out = 0;
  if (out_r) {
    while (next_out < out_r->size() && (*out_r)[next_out] <= r + 1e-14) {
      out_y->push_back(y);
      ++next_out;
    }
  }
  while (r < r1 - 1e-13) {
    const double hstep = std::min({h, hcap, r1 - r});
    if (hstep < 1e-14) throw NumericalError("radial solve: step-size underflow");
    double err;
    State ynew = dp_step(r, y, hstep, err);
    const double scale =
        atol + rtol * std::max({std::abs(y.f), std::abs(y.a), std::abs(ynew.f), std::abs(ynew.a)});
    if (err <= scale) {
      const double rnew = r + hstep;
      if (out_r) {
        const State d0 = rhs(r, y);
        const State d1 = rhs(rnew, ynew);
        while (next_out < out_r->size() && (*out_r)[next_out] <= rnew + 1e-14) {
          const double th = ((*out_r)[next_out] - r) / hstep;
          const double h00 = 1 + th * th * (2 * th - 3);
          const double h10 = th * (1 + th * (th - 2));
          const double h01 = th * th * (3 - 2 * th);
          const double h11 = th * th * (th - 1);
          State s;
          s.f = h00 * y.f + hstep * h10 * d0.f + h01 * ynew.f + hstep * h11 * d1.f;
          s.a = h00 * y.a + hstep * h10 * d0.a + h01 * ynew.a + hstep * h11 * d1.a;
          out_y->push_back(s);
          ++next_out;
        }
      }
      r = rnew;
      y = ynew;
      if (y.f > 1.0 + 1e-12) {
        if (r_event) *r_event = r;
        return Shot::Over;
      }
      if (y.a > 1.0 + 1e-12) {
        if (r_event) *r_event = r;
        return Shot::Under;
      }
      const double fac =
          err > 0.0 ? std::clamp(0.9 * std::pow(scale / err, 0.2), 0.2, 5.0) : 5.0;
      h = std::min(hstep * fac, hcap);
    } else {
      h = hstep * std::clamp(0.9 * std::pow(scale / err, 0.2), 0.1, 0.9);
    }
  }
  return Shot::NoEvent;
}

Shot classify(double alpha, double r_limit) {
  const State y0 = series_launch(alpha, kSeriesStart);
  double r_event = 0.0;
  return integrate(alpha, kSeriesStart, y0, r_limit, nullptr, nullptr, &r_event);
}

}  // namespace

RadialProfile solve_bogomolny(double r_max, double tol) {
  if (r_max < 10.0) throw ValidationError("solve_bogomolny: r_max must be >= 10");
  if (!(tol > 0.0) || tol > 1e-6)
    throw ValidationError("solve_bogomolny: tol must satisfy 0 < tol <= 1e-6");

  const double r_limit = std::max(r_max, 20.0) + 15.0;
  double lo = 1e-3, hi = 10.0;
  if (classify(lo, r_limit) != Shot::Under || classify(hi, r_limit) != Shot::Over)
    throw NumericalError("shooting bracket failure");

  // Bisect to bracket exhaustion; the limit orbit is the connecting solution.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (classify(mid, r_limit) == Shot::Over)
      hi = mid;
    else
      lo = mid;
  }
  const double alpha = 0.5 * (lo + hi);

  RadialProfile prof;
  prof.shoot_slope = alpha;
  prof.r_max = r_max;
  prof.tol = tol;

  const size_t n_out = static_cast<size_t>(std::ceil(r_max / 0.00025)) + 1;
  const double dr = r_max / static_cast<double>(n_out - 1);
  prof.r.resize(n_out);
  for (size_t i = 0; i < n_out; ++i) prof.r[i] = dr * static_cast<double>(i);

  // Integrate the winning slope with dense output up to the trust radius.
  // The run may legitimately end early when the residual unstable component
  // finally takes over; the covered prefix is all that is used.
  const double r_shot_end = std::min(r_max, 17.0);
  std::vector<double> shot_r;
  for (double rr : prof.r)
    if (rr > kSeriesStart && rr <= r_shot_end + 1e-12) shot_r.push_back(rr);
  std::vector<State> shot_y;
  shot_y.reserve(shot_r.size());
  integrate(alpha, kSeriesStart, series_launch(alpha, kSeriesStart), r_shot_end + 1e-12,
            &shot_r, &shot_y);
  if (shot_y.empty()) throw NumericalError("radial solve: integration diverged immediately");
  shot_r.resize(shot_y.size());
  const double r_cov = shot_r.back();

  // Tail constant from the match point (stable-manifold continuation).
  double r_match = std::min(kMatchRadius, r_cov - kBlendWidth);
  if (r_match < 8.0)
    throw NumericalError("radial solve: shooting diverged before the tail match radius");
  double c_tail = 0.0;
  {
    double f_match = 0.0;
    for (size_t i = 0; i + 1 < shot_r.size(); ++i) {
      if (shot_r[i] <= r_match && r_match <= shot_r[i + 1]) {
        const double s = (r_match - shot_r[i]) / (shot_r[i + 1] - shot_r[i]);
        f_match = (1.0 - s) * shot_y[i].f + s * shot_y[i + 1].f;
        break;
      }
    }
    c_tail = (1.0 - f_match) / std::cyl_bessel_k(0, r_match);
  }
  prof.tail_constant = c_tail;

  prof.f.assign(n_out, 0.0);
  prof.a.assign(n_out, 0.0);
  prof.f_prime.assign(n_out, 0.0);
  prof.a_prime.assign(n_out, 0.0);
  prof.f_prime[0] = alpha;

  size_t shot_k = 0;
  for (size_t i = 1; i < n_out; ++i) {
    const double rr = prof.r[i];
    double fs = 0.0, as = 0.0;
    bool have_shot = false;
    if (shot_k < shot_r.size() && std::abs(shot_r[shot_k] - rr) < 1e-9) {
      fs = shot_y[shot_k].f;
      as = shot_y[shot_k].a;
      ++shot_k;
      have_shot = true;
    }
    if (rr <= r_match || (have_shot && rr < r_match + kBlendWidth)) {
      if (!have_shot) throw NumericalError("radial solve: missing shot node at r < match radius");
      if (rr <= r_match) {
        prof.f[i] = fs;
        prof.a[i] = as;
        prof.f_prime[i] = (1.0 - as) * fs / rr;
        prof.a_prime[i] = rr * (1.0 - fs * fs) / 2.0;
        continue;
      }
    }
    const double k0 = std::cyl_bessel_k(0, rr);
    const double k1 = std::cyl_bessel_k(1, rr);
    const double ft = 1.0 - c_tail * k0;
    const double at = 1.0 - c_tail * rr * k1;
    const double ftp = c_tail * k1;       // (c K0)' = -c K1
    const double atp = c_tail * rr * k0;  // (c r K1)' = -c r K0
    if (!have_shot || rr >= r_match + kBlendWidth) {
      prof.f[i] = ft;
      prof.a[i] = at;
      prof.f_prime[i] = ftp;
      prof.a_prime[i] = atp;
    } else {
      const double s = (rr - r_match) / kBlendWidth;
      const double w = smoothstep5(s);
      const double wp = smoothstep5_d1(s) / kBlendWidth;
      const double fsp = (1.0 - as) * fs / rr;
      const double asp = rr * (1.0 - fs * fs) / 2.0;
      prof.f[i] = (1.0 - w) * fs + w * ft;
      prof.a[i] = (1.0 - w) * as + w * at;
      prof.f_prime[i] = wp * (ft - fs) + (1.0 - w) * fsp + w * ftp;
      prof.a_prime[i] = wp * (at - as) + (1.0 - w) * asp + w * atp;
    }
  }

  prof.boundary_dev_f = 1.0 - prof.f.back();
  prof.boundary_dev_a = 1.0 - prof.a.back();
  prof.build_interpolants();
  return prof;
}

void RadialProfile::build_interpolants() const {
  if (built_) return;
  if_ = MonotoneCubic(r, f, f_prime);
  ia_ = MonotoneCubic(r, a, a_prime);
  ifp_ = MonotoneCubic::from_values(r, f_prime);
  iap_ = MonotoneCubic::from_values(r, a_prime);
  built_ = true;
}

double RadialProfile::f_at(double rr) const {
  build_interpolants();
  if (rr >= r.back()) return f.back();
  return if_(rr);
}

double RadialProfile::a_at(double rr) const {
  build_interpolants();
  if (rr >= r.back()) return a.back();
  return ia_(rr);
}

double RadialProfile::fp_at(double rr) const {
  build_interpolants();
  if (rr >= r.back()) return f_prime.back();
  return ifp_(rr);
}

double RadialProfile::ap_at(double rr) const {
  build_interpolants();
  if (rr >= r.back()) return a_prime.back();
  return iap_(rr);
}

double RadialProfile::ap_over_r(double rr) const {
  if (rr < (r.size() > 1 ? r[1] : 1e-8)) {
    const double ff = shoot_slope * rr;
    return (1.0 - ff * ff) / 2.0;
  }
  return ap_at(rr) / rr;
}

std::pair<double, double> second_order_residual(const RadialProfile& profile) {
  const size_t n = profile.r.size();
  if (n < 3) throw ValidationError("second_order_residual: profile too short");
  double sup_f = 0.0, sup_a = 0.0;
  for (size_t i = 1; i + 1 < n; ++i) {
    const double dr0 = profile.r[i] - profile.r[i - 1];
    const double dr1 = profile.r[i + 1] - profile.r[i];
    const double h = 0.5 * (dr0 + dr1);
    const double fpp = (profile.f[i + 1] - 2.0 * profile.f[i] + profile.f[i - 1]) / (h * h);
    const double app = (profile.a[i + 1] - 2.0 * profile.a[i] + profile.a[i - 1]) / (h * h);
    const double rr = profile.r[i];
    const double f = profile.f[i], a = profile.a[i];
    const double rf = -fpp - profile.f_prime[i] / rr + (1.0 - a) * (1.0 - a) * f / (rr * rr) -
                      0.5 * f * (1.0 - f * f);
    const double ra = -app + profile.a_prime[i] / rr - f * f * (1.0 - a);
    sup_f = std::max(sup_f, std::abs(rf));
    sup_a = std::max(sup_a, std::abs(ra));
  }
  return {sup_f, sup_a};
}

std::pair<double, double> first_order_fd_residual(const RadialProfile& profile) {
  const size_t n = profile.r.size();
  double sup_f = 0.0, sup_a = 0.0;
  for (size_t i = 1; i + 1 < n; ++i) {
    const double h2 = profile.r[i + 1] - profile.r[i - 1];
    const double fp = (profile.f[i + 1] - profile.f[i - 1]) / h2;
    const double ap = (profile.a[i + 1] - profile.a[i - 1]) / h2;
    const double rr = profile.r[i];
    sup_f = std::max(sup_f, std::abs(fp - (1.0 - profile.a[i]) * profile.f[i] / rr));
    sup_a = std::max(sup_a, std::abs(ap - rr * (1.0 - profile.f[i] * profile.f[i]) / 2.0));
  }
  return {sup_f, sup_a};
}

DecayFit decay_fit(const RadialProfile& profile, double r_lo, double r_hi) {
  if (r_lo < 5.0) throw ValidationError("decay_fit: window must start at r >= 5");
  if (r_hi > profile.r_max) throw ValidationError("decay_fit: window exceeds r_max");
  std::vector<double> xs, yf, ya;
  for (size_t i = 0; i < profile.r.size(); ++i) {
    const double rr = profile.r[i];
    if (rr < r_lo || rr > r_hi) continue;
    const double df = 1.0 - profile.f[i];
    const double da = 1.0 - profile.a[i];
    if (df <= 0.0)
      throw NumericalError("decay_fit: 1 - f nonpositive in window (profile overshoot)");
    if (da <= 0.0)
      throw NumericalError("decay_fit: 1 - a nonpositive in window (profile overshoot)");
    xs.push_back(rr);
    yf.push_back(std::log(df));
    ya.push_back(std::log(da));
  }
  if (xs.size() < 10) throw ValidationError("decay_fit: fewer than 10 nodes in window");
  DecayFit fit;
  fit.rate_f = -lsq_slope(xs, yf);
  fit.rate_a = -lsq_slope(xs, ya);
  return fit;
}

FieldConfiguration sample_vortex(const RadialProfile& profile, const Grid2& grid,
                                 std::array<double, 2> center, double epsilon) {
  if (epsilon <= 0.0) throw ValidationError("sample_vortex: epsilon must be positive");
  grid.validate();
  // coverage: every grid point must map inside the profile
  double need = 0.0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1}) {
      const double dx = sx * grid.half_width - center[0];
      const double dy = sy * grid.half_width - center[1];
      need = std::max(need, std::hypot(dx, dy));
    }
  if (need / epsilon > profile.r_max * (1.0 + 1e-12))
    throw ValidationError("sample_vortex: profile coverage insufficient (need r_max >= " +
                          std::to_string(need / epsilon) + ")");

  const Lattice lat = Lattice::from(grid);
  FieldConfiguration out = FieldConfiguration::zeros(lat, epsilon);
  const size_t n = lat.size();
  const size_t n1 = lat.shape[1];
  const double cut = 0.5 * grid.spacing;
  parallel_for(n, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const int i0 = static_cast<int>(i / n1);
      const int i1 = static_cast<int>(i % n1);
      const double z1 = lat.coord(0, i0) - center[0];
      const double z2 = lat.coord(1, i1) - center[1];
      const double rho = std::hypot(z1, z2);
      if (rho < cut) {
        // series start: u ~ alpha (z1 + i z2)/eps, A -> 0 linearly
        out.u[i] = profile.shoot_slope * cplx(z1, z2) / epsilon;
        out.A[i] = -z2 / (4.0 * epsilon * epsilon);
        out.A[n + i] = z1 / (4.0 * epsilon * epsilon);
      } else {
        const double s = rho / epsilon;
        const double fv = profile.f_at(s);
        const double av = profile.a_at(s);
        out.u[i] = fv * cplx(z1, z2) / rho;
        out.A[i] = -av * z2 / (rho * rho);
        out.A[n + i] = av * z1 / (rho * rho);
      }
    }
  });
  return out;
}

void profile_to_csv(const RadialProfile& profile, const std::string& csv_path,
                    const std::string& sidecar_path) {
  std::ofstream out(csv_path);
  if (!out) throw ValidationError("cannot open " + csv_path);
  out << "r,f,a,fp,ap\n";
  char line[256];
  for (size_t i = 0; i < profile.r.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g\n", profile.r[i],
                  profile.f[i], profile.a[i], profile.f_prime[i], profile.a_prime[i]);
    out << line;
  }
  nlohmann::json meta;
  meta["alpha"] = profile.shoot_slope;
  meta["tol"] = profile.tol;
  meta["r_max"] = profile.r_max;
  meta["tail_constant"] = profile.tail_constant;
  std::ofstream side(sidecar_path);
  if (!side) throw ValidationError("cannot open " + sidecar_path);
  side << meta.dump(2) << "\n";
}

RadialProfile profile_from_csv(const std::string& csv_path, const std::string& sidecar_path) {
  std::ifstream in(csv_path);
  if (!in) throw ValidationError("cannot open " + csv_path);
  RadialProfile prof;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double v[5];
    char comma;
    ss >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3] >> comma >> v[4];
    if (!ss) throw ValidationError("malformed profile CSV line: " + line);
    prof.r.push_back(v[0]);
    prof.f.push_back(v[1]);
    prof.a.push_back(v[2]);
    prof.f_prime.push_back(v[3]);
    prof.a_prime.push_back(v[4]);
  }
  std::ifstream side(sidecar_path);
  if (!side) throw ValidationError("cannot open " + sidecar_path);
  nlohmann::json meta = nlohmann::json::parse(side);
  prof.shoot_slope = meta.at("alpha").get<double>();
  prof.tol = meta.at("tol").get<double>();
  prof.r_max = meta.at("r_max").get<double>();
  prof.tail_constant = meta.value("tail_constant", 0.0);
  prof.build_interpolants();
  return prof;
}

}  // namespace vortexlab
