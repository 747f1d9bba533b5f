#include "vortexlab/fields_ops.hpp"

#include <cmath>
#include <numbers>

#include "vortexlab/util.hpp"

namespace vortexlab {

namespace {

// Lexicographic multi-index walker (last axis fastest).
struct Walker {
  const Lattice& lat;
  std::vector<int> idx;
  explicit Walker(const Lattice& l, size_t start = 0) : lat(l) { lat.unravel(start, idx); }
  void next() {
    for (int a = lat.dim() - 1; a >= 0; --a) {
      if (++idx[a] < lat.shape[a]) return;
      idx[a] = 0;
    }
  }
};

void require_stencil_room(const Lattice& lat) {
  for (int a = 0; a < lat.dim(); ++a)
    if (lat.shape[a] < 4)
      throw ValidationError("grid too small for the 5-point stencil (need >= 4 nodes per axis)");
}

double trap_weight(const Lattice& lat, const std::vector<int>& idx) {
  double w = 1.0;
  for (int a = 0; a < lat.dim(); ++a) {
    w *= lat.spacing[a];
    if (idx[a] == 0 || idx[a] == lat.shape[a] - 1) w *= 0.5;
  }
  return w;
}

}  // namespace

int CurvatureField::pair_index(int a, int b) const {
  for (size_t p = 0; p < pairs.size(); ++p)
    if (pairs[p].first == a && pairs[p].second == b) return static_cast<int>(p);
  throw ValidationError("curvature: no such component pair");
}

Region Region::ball(std::vector<double> center, double r) {
  Region reg;
  reg.kind = Kind::Ball;
  reg.center = std::move(center);
  reg.r1 = r;
  return reg;
}

Region Region::annulus(std::vector<double> center, double r0, double r1) {
  Region reg;
  reg.kind = Kind::Annulus;
  reg.center = std::move(center);
  reg.r0 = r0;
  reg.r1 = r1;
  return reg;
}

bool Region::contains(const std::vector<double>& x) const {
  if (kind == Kind::All) return true;
  double rr = 0.0;
  for (size_t a = 0; a < x.size(); ++a) {
    const double d = x[a] - center[a];
    rr += d * d;
  }
  const double r = std::sqrt(rr);
  if (kind == Kind::Ball) return r <= r1;
  return r >= r0 && r <= r1;
}

GradientField covariant_gradient(const FieldConfiguration& config) {
  config.validate();
  const Lattice& lat = config.lat;
  require_stencil_room(lat);
  const size_t n = lat.size();
  const int d = lat.dim();
  const auto& st = lat.strides();

  GradientField g;
  g.dim = d;
  g.stride_ = n;
  g.comp.assign(static_cast<size_t>(d) * n, cplx(0, 0));

  parallel_for(n, [&](size_t lo, size_t hi) {
    Walker w(lat, lo);
    for (size_t i = lo; i < hi; ++i, w.next()) {
      for (int a = 0; a < d; ++a) {
        const cplx du =
            stencil::d1(config.u, i, w.idx[a], lat.shape[a], st[a], lat.spacing[a]);
        g.comp[a * n + i] = du - cplx(0, 1) * config.A[a * n + i] * config.u[i];
      }
    }
  });
  return g;
}

CurvatureField curvature(const FieldConfiguration& config) {
  config.validate();
  const Lattice& lat = config.lat;
  require_stencil_room(lat);
  const size_t n = lat.size();
  const int d = lat.dim();
  const auto& st = lat.strides();

  CurvatureField f;
  f.dim = d;
  f.stride_ = n;
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) f.pairs.emplace_back(a, b);
  f.comp.assign(f.pairs.size() * n, 0.0);

  parallel_for(n, [&](size_t lo, size_t hi) {
    Walker w(lat, lo);
    for (size_t i = lo; i < hi; ++i, w.next()) {
      for (size_t p = 0; p < f.pairs.size(); ++p) {
        const auto [a, b] = f.pairs[p];
        double dab = 0.0, dba = 0.0;
        {
          // d_a A_b
          const size_t base = static_cast<size_t>(b) * n;
          const std::vector<double>& Ab = config.A;
          const size_t j = base + i;
          const int ia = w.idx[a];
          const int na = lat.shape[a];
          const size_t str = st[a];
          const double h = lat.spacing[a];
          if (ia > 0 && ia < na - 1)
            dab = (Ab[j + str] - Ab[j - str]) / (2 * h);
          else if (ia == 0)
            dab = (-3 * Ab[j] + 4 * Ab[j + str] - Ab[j + 2 * str]) / (2 * h);
          else
            dab = (3 * Ab[j] - 4 * Ab[j - str] + Ab[j - 2 * str]) / (2 * h);
        }
        {
          // d_b A_a
          const size_t base = static_cast<size_t>(a) * n;
          const std::vector<double>& Aa = config.A;
          const size_t j = base + i;
          const int ib = w.idx[b];
          const int nb = lat.shape[b];
          const size_t str = st[b];
          const double h = lat.spacing[b];
          if (ib > 0 && ib < nb - 1)
            dba = (Aa[j + str] - Aa[j - str]) / (2 * h);
          else if (ib == 0)
            dba = (-3 * Aa[j] + 4 * Aa[j + str] - Aa[j + 2 * str]) / (2 * h);
          else
            dba = (3 * Aa[j] - 4 * Aa[j - str] + Aa[j - 2 * str]) / (2 * h);
        }
        f.comp[p * n + i] = dab - dba;
      }
    }
  });
  return f;
}

double energy_density_at(const FieldConfiguration& config, const GradientField& grad,
                         const CurvatureField& curv, size_t i) {
  const size_t n = config.size();
  const double e2 = config.epsilon * config.epsilon;
  double kin = 0.0;
  for (int c = 0; c < grad.dim; ++c) kin += std::norm(grad.comp[c * n + i]);
  double f2 = 0.0;
  for (size_t p = 0; p < curv.pairs.size(); ++p) {
    const double v = curv.comp[p * n + i];
    f2 += v * v;
  }
  const double w = 1.0 - std::norm(config.u[i]);
  return kin + e2 * f2 + w * w / (4.0 * e2);
}

EnergyBreakdown energy(const FieldConfiguration& config, const Region& region) {
  config.validate();
  const Lattice& lat = config.lat;
  const size_t n = lat.size();
  const double e2 = config.epsilon * config.epsilon;

  const GradientField grad = covariant_gradient(config);
  const CurvatureField curv = curvature(config);

  std::vector<int> idx(lat.dim());
  std::vector<double> x(lat.dim());
  size_t inside = 0;
  auto masked = [&](size_t i, auto&& density) -> double {
    lat.unravel(i, idx);
    lat.coords(idx, x);
    if (!region.contains(x)) return 0.0;
    ++inside;
    return density(i) * trap_weight(lat, idx);
  };

  EnergyBreakdown out;
  out.kinetic = pairwise_sum_of(n, [&](size_t i) {
    return masked(i, [&](size_t j) {
      double kin = 0.0;
      for (int c = 0; c < grad.dim; ++c) kin += std::norm(grad.comp[c * n + j]);
      return kin;
    });
  });
  if (inside == 0) throw ValidationError("energy: empty region");
  inside = 0;
  out.curvature = pairwise_sum_of(n, [&](size_t i) {
    return masked(i, [&](size_t j) {
      double f2 = 0.0;
      for (size_t p = 0; p < curv.pairs.size(); ++p) f2 += curv.comp[p * n + j] * curv.comp[p * n + j];
      return e2 * f2;
    });
  });
  inside = 0;
  out.potential = pairwise_sum_of(n, [&](size_t i) {
    return masked(i, [&](size_t j) {
      const double w = 1.0 - std::norm(config.u[j]);
      return w * w / (4.0 * e2);
    });
  });
  out.total = out.kinetic + out.curvature + out.potential;
  return out;
}

Perturbation euler_lagrange_residual(const FieldConfiguration& config) {
  config.validate();
  const Lattice& lat = config.lat;
  require_stencil_room(lat);
  const size_t n = lat.size();
  const int d = lat.dim();
  const auto& st = lat.strides();
  const double e2 = config.epsilon * config.epsilon;

  // div A, needed for both the scalar equation and d*dA.
  std::vector<double> divA(n, 0.0);
  parallel_for(n, [&](size_t lo, size_t hi) {
    Walker w(lat, lo);
    for (size_t i = lo; i < hi; ++i, w.next()) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        const size_t base = static_cast<size_t>(a) * n;
        s += stencil::d1(config.A, base + i, w.idx[a], lat.shape[a], st[a], lat.spacing[a]);
      }
      divA[i] = s;
    }
  });

  Perturbation out = Perturbation::zeros(lat);

  parallel_for(n, [&](size_t lo, size_t hi) {
    Walker w(lat, lo);
    for (size_t i = lo; i < hi; ++i, w.next()) {
      // scalar equation: -eps^2 Lap^A u - (1/2)(1-|u|^2) u
      cplx lap(0, 0);
      cplx AdotDu(0, 0);
      double A2 = 0.0;
      for (int a = 0; a < d; ++a) {
        lap += stencil::d2(config.u, i, w.idx[a], lat.shape[a], st[a], lat.spacing[a]);
        const cplx du = stencil::d1(config.u, i, w.idx[a], lat.shape[a], st[a], lat.spacing[a]);
        const double Aa = config.A[a * n + i];
        AdotDu += Aa * du;
        A2 += Aa * Aa;
      }
      const cplx u = config.u[i];
      const cplx lapA = lap - cplx(0, 2) * AdotDu - cplx(0, 1) * divA[i] * u - A2 * u;
      out.phi[i] = -e2 * lapA - 0.5 * (1.0 - std::norm(u)) * u;

      // 1-form equation: eps^2 (-Lap A_k + d_k div A) - <grad^A_k u, i u>
      for (int k = 0; k < d; ++k) {
        double lapAk = 0.0;
        const size_t base = static_cast<size_t>(k) * n;
        for (int a = 0; a < d; ++a)
          lapAk += stencil::d2(config.A, base + i, w.idx[a], lat.shape[a], st[a],
                                   lat.spacing[a]);
        const double dk_div =
            stencil::d1(divA, i, w.idx[k], lat.shape[k], st[k], lat.spacing[k]);
        const cplx du = stencil::d1(config.u, i, w.idx[k], lat.shape[k], st[k], lat.spacing[k]);
        const cplx gradk = du - cplx(0, 1) * config.A[base + i] * u;
        out.omega[base + i] = e2 * (-lapAk + dk_div) - herm(gradk, cplx(0, 1) * u);
      }
    }
  });
  return out;
}

BogomolnyResidual bogomolny_residual(const FieldConfiguration& config) {
  if (config.lat.dim() != 2)
    throw ValidationError("bogomolny_residual: self-duality is stated in 2D only");
  config.validate();
  const Lattice& lat = config.lat;
  require_stencil_room(lat);
  const size_t n = lat.size();
  const double eps = config.epsilon;

  const CurvatureField f = curvature(config);
  const GradientField g = covariant_gradient(config);

  BogomolnyResidual out;
  out.first.resize(n);
  out.second.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.first[i] = eps * f.comp[i] - (1.0 - std::norm(config.u[i])) / (2.0 * eps);
    out.second[i] = 0.5 * (g.comp[i] + cplx(0, 1) * g.comp[n + i]);
  }
  return out;
}

FieldConfiguration gauge_transform(const FieldConfiguration& config,
                                   const std::vector<double>& gamma) {
  config.validate();
  const Lattice& lat = config.lat;
  const size_t n = lat.size();
  if (gamma.size() != n) throw ValidationError("gauge_transform: gamma layout mismatch");
  const int d = lat.dim();
  const auto& st = lat.strides();

  FieldConfiguration out = config;
  parallel_for(n, [&](size_t lo, size_t hi) {
    Walker w(lat, lo);
    for (size_t i = lo; i < hi; ++i, w.next()) {
      out.u[i] = config.u[i] * std::polar(1.0, gamma[i]);
      for (int a = 0; a < d; ++a)
        out.A[a * n + i] +=
            stencil::d1(gamma, i, w.idx[a], lat.shape[a], st[a], lat.spacing[a]);
    }
  });
  return out;
}

std::vector<double> coulomb_residual(const FieldConfiguration& config) {
  config.validate();
  const Lattice& lat = config.lat;
  require_stencil_room(lat);
  const size_t n = lat.size();
  const int d = lat.dim();
  const auto& st = lat.strides();

  std::vector<double> out(n, 0.0);
  parallel_for(n, [&](size_t lo, size_t hi) {
    Walker w(lat, lo);
    for (size_t i = lo; i < hi; ++i, w.next()) {
      double s = 0.0;
      for (int a = 0; a < d; ++a)
        s += stencil::d1(config.A, a * n + i, w.idx[a], lat.shape[a], st[a], lat.spacing[a]);
      out[i] = -s;
    }
  });
  return out;
}

double sup_norm_interior(const Lattice& lat, const Perturbation& p, int margin) {
  const size_t n = lat.size();
  std::vector<int> idx(lat.dim());
  double m = 0.0;
  for (size_t i = 0; i < n; ++i) {
    lat.unravel(i, idx);
    bool interior = true;
    for (int a = 0; a < lat.dim(); ++a)
      if (idx[a] < margin || idx[a] > lat.shape[a] - 1 - margin) interior = false;
    if (!interior) continue;
    m = std::max(m, std::abs(p.phi[i]));
    for (int c = 0; c < lat.dim(); ++c) m = std::max(m, std::abs(p.omega[c * n + i]));
  }
  return m;
}

double sup_norm_interior(const Lattice& lat, const std::vector<double>& field, int margin) {
  std::vector<int> idx(lat.dim());
  double m = 0.0;
  for (size_t i = 0; i < field.size(); ++i) {
    lat.unravel(i, idx);
    bool interior = true;
    for (int a = 0; a < lat.dim(); ++a)
      if (idx[a] < margin || idx[a] > lat.shape[a] - 1 - margin) interior = false;
    if (interior) m = std::max(m, std::abs(field[i]));
  }
  return m;
}

double sup_norm_interior(const Lattice& lat, const std::vector<cplx>& field, int margin) {
  std::vector<int> idx(lat.dim());
  double m = 0.0;
  for (size_t i = 0; i < field.size(); ++i) {
    lat.unravel(i, idx);
    bool interior = true;
    for (int a = 0; a < lat.dim(); ++a)
      if (idx[a] < margin || idx[a] > lat.shape[a] - 1 - margin) interior = false;
    if (interior) m = std::max(m, std::abs(field[i]));
  }
  return m;
}

int winding_number(const FieldConfiguration& config, const std::vector<double>& center,
                   double radius, int samples) {
  const Lattice& lat = config.lat;
  if (lat.dim() != 2) throw ValidationError("winding_number: 2D configurations only");
  const size_t n1 = lat.shape[1];

  // bilinear interpolation of u at a point
  auto interp = [&](double x, double y) -> cplx {
    const double sx = (x - lat.origin[0]) / lat.spacing[0];
    const double sy = (y - lat.origin[1]) / lat.spacing[1];
    int i = static_cast<int>(std::floor(sx));
    int j = static_cast<int>(std::floor(sy));
    i = std::max(0, std::min(lat.shape[0] - 2, i));
    j = std::max(0, std::min(lat.shape[1] - 2, j));
    const double fx = sx - i, fy = sy - j;
    const cplx u00 = config.u[i * n1 + j], u10 = config.u[(i + 1) * n1 + j];
    const cplx u01 = config.u[i * n1 + j + 1], u11 = config.u[(i + 1) * n1 + j + 1];
    return (1 - fx) * (1 - fy) * u00 + fx * (1 - fy) * u10 + (1 - fx) * fy * u01 +
           fx * fy * u11;
  };

  double acc = 0.0;
  cplx prev = interp(center[0] + radius, center[1]);
  for (int k = 1; k <= samples; ++k) {
    const double th = 2.0 * std::numbers::pi * k / samples;
    const cplx cur = interp(center[0] + radius * std::cos(th), center[1] + radius * std::sin(th));
    const cplx ratio = cur / prev;
    acc += std::arg(ratio);
    prev = cur;
  }
  return static_cast<int>(std::lround(acc / (2.0 * std::numbers::pi)));
}

}  // namespace vortexlab
