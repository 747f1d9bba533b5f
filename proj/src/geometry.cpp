#include "vortexlab/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "vortexlab/util.hpp"

namespace vortexlab {

namespace {

double trap_weight(const Lattice& lat, const std::vector<int>& idx) {
  double w = 1.0;
  for (int a = 0; a < lat.dim(); ++a) {
    w *= lat.spacing[a];
    if (idx[a] == 0 || idx[a] == lat.shape[a] - 1) w *= 0.5;
  }
  return w;
}

void check_ball_inside(const Lattice& lat, const std::vector<double>& center, double r) {
  for (int a = 0; a < lat.dim(); ++a) {
    const double lo = lat.origin[a];
    const double hi = lat.origin[a] + lat.spacing[a] * (lat.shape[a] - 1);
    if (center[a] - r < lo - 1e-12 || center[a] + r > hi + 1e-12)
      throw ValidationError("ball exits domain");
  }
}

// Orthonormalizes `plane` and completes it to a full basis of R^d; returns a
// d x d matrix whose first n rows are the tangential frame.
Eigen::MatrixXd complete_frame(int d, const std::vector<std::vector<double>>& plane) {
  const int n = static_cast<int>(plane.size());
  Eigen::MatrixXd frame(d, d);
  int have = 0;
  auto push = [&](Eigen::VectorXd v) -> bool {
    for (int k = 0; k < have; ++k) v -= frame.row(k).transpose() * frame.row(k).dot(v);
    const double nm = v.norm();
    if (nm < 1e-12) return false;
    frame.row(have++) = v.transpose() / nm;
    return true;
  };
  for (const auto& p : plane) {
    if (static_cast<int>(p.size()) != d)
      throw ValidationError("excess: plane vector has wrong dimension");
    Eigen::VectorXd v(d);
    for (int a = 0; a < d; ++a) v[a] = p[a];
    if (!push(v)) throw ValidationError("excess: degenerate plane frame");
  }
  for (int a = 0; a < d && have < d; ++a) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    v[a] = 1.0;
    push(v);
  }
  if (have != d) throw NumericalError("excess: frame completion failed");
  (void)n;
  return frame;
}

}  // namespace

ExcessReport excess(const FieldConfiguration& config, const std::vector<double>& center,
                    double r, const std::vector<std::vector<double>>& plane) {
  config.validate();
  const Lattice& lat = config.lat;
  const int d = lat.dim();
  const int n = static_cast<int>(plane.size());
  if (n != d - 2) throw ValidationError("excess: plane must have codimension 2");
  check_ball_inside(lat, center, r);
  const Eigen::MatrixXd frame = complete_frame(d, plane);

  const GradientField grad = covariant_gradient(config);
  const CurvatureField curv = curvature(config);
  const size_t N = lat.size();
  const double e2 = config.epsilon * config.epsilon;

  std::vector<int> idx(d);
  std::vector<double> x(d);
  const double integral = pairwise_sum_of(N, [&](size_t i) {
    lat.unravel(i, idx);
    lat.coords(idx, x);
    double rr = 0.0;
    for (int a = 0; a < d; ++a) rr += (x[a] - center[a]) * (x[a] - center[a]);
    if (rr > r * r) return 0.0;

    double val = 0.0;
    // tangential gauged derivatives
    for (int k = 0; k < n; ++k) {
      cplx g(0, 0);
      for (int a = 0; a < d; ++a) g += frame(k, a) * grad.comp[a * N + i];
      val += std::norm(g);
    }
    // curvature components, unordered pairs except the purely normal one
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k) {
        if (j == d - 2 && k == d - 1) continue;
        double fjk = 0.0;
        for (size_t p = 0; p < curv.pairs.size(); ++p) {
          const auto [a, b] = curv.pairs[p];
          fjk += curv.comp[p * N + i] * (frame(j, a) * frame(k, b) - frame(j, b) * frame(k, a));
        }
        val += e2 * fjk * fjk;
      }
    return val * trap_weight(lat, idx);
  });

  ExcessReport rep;
  rep.center = center;
  rep.radius = r;
  rep.excess = integral / (std::pow(r, n) * 2.0 * std::numbers::pi);
  rep.energy = energy(config, Region::ball(center, r));
  rep.density_ratio =
      rep.energy.total / (std::pow(r, n) * 2.0 * std::numbers::pi * unit_ball_volume(n));
  return rep;
}

DensityReport density_ratio(const FieldConfiguration& config, double r) {
  config.validate();
  const int n = config.lat.dim() - 2;
  std::vector<double> center(config.lat.dim(), 0.0);
  check_ball_inside(config.lat, center, r);
  DensityReport rep;
  rep.energy = energy(config, Region::ball(center, r));
  const double bn = unit_ball_volume(n) * std::pow(r, n);
  rep.unnormalized = rep.energy.total / bn;
  rep.normalized = rep.unnormalized / (2.0 * std::numbers::pi);
  return rep;
}

namespace {

// Newton solve of the bilinear 2x2 system inside a unit cell; returns false
// if the zero curves do not intersect within the cell.
bool bilinear_zero(const double re[4], const double im[4], double& s, double& t) {
  const double a0 = re[0], a1 = re[1] - re[0], a2 = re[2] - re[0],
               a3 = re[3] - re[1] - re[2] + re[0];
  const double b0 = im[0], b1 = im[1] - im[0], b2 = im[2] - im[0],
               b3 = im[3] - im[1] - im[2] + im[0];
  s = 0.5;
  t = 0.5;
  for (int it = 0; it < 50; ++it) {
    const double R = a0 + a1 * s + a2 * t + a3 * s * t;
    const double I = b0 + b1 * s + b2 * t + b3 * s * t;
    const double j11 = a1 + a3 * t, j12 = a2 + a3 * s;
    const double j21 = b1 + b3 * t, j22 = b2 + b3 * s;
    const double det = j11 * j22 - j12 * j21;
    if (std::abs(det) < 1e-300) return false;
    const double ds = (R * j22 - I * j12) / det;
    const double dt = (I * j11 - R * j21) / det;
    s -= ds;
    t -= dt;
    if (std::abs(ds) + std::abs(dt) < 1e-14) break;
    if (s < -2.0 || s > 3.0 || t < -2.0 || t > 3.0) return false;
  }
  const double tol = 1e-9;
  return s >= -tol && s <= 1.0 + tol && t >= -tol && t <= 1.0 + tol;
}

bool sign_change(double v0, double v1, double v2, double v3) {
  const double mn = std::min(std::min(v0, v1), std::min(v2, v3));
  const double mx = std::max(std::max(v0, v1), std::max(v2, v3));
  return mn <= 0.0 && mx >= 0.0;
}

}  // namespace

std::vector<std::vector<double>> extract_nodal_set(const FieldConfiguration& config) {
  config.validate();
  const Lattice& lat = config.lat;
  const int d = lat.dim();
  const size_t N = lat.size();
  const size_t nz1 = lat.shape[d - 1];
  const size_t nz = static_cast<size_t>(lat.shape[d - 2]) * nz1;
  const size_t nslices = N / nz;

  std::vector<std::vector<double>> out;
  std::vector<int> idx(d);
  for (size_t isl = 0; isl < nslices; ++isl) {
    std::vector<std::array<double, 2>> slice_pts;
    for (int i1 = 0; i1 + 1 < lat.shape[d - 2]; ++i1)
      for (int i2 = 0; i2 + 1 < lat.shape[d - 1]; ++i2) {
        const size_t base = isl * nz + static_cast<size_t>(i1) * nz1 + i2;
        const size_t c[4] = {base, base + nz1, base + 1, base + nz1 + 1};
        double re[4], im[4];
        for (int k = 0; k < 4; ++k) {
          re[k] = config.u[c[k]].real();
          im[k] = config.u[c[k]].imag();
        }
        if (!sign_change(re[0], re[1], re[2], re[3]) || !sign_change(im[0], im[1], im[2], im[3]))
          continue;
        double s, t;
        if (!bilinear_zero(re, im, s, t)) continue;
        const double z1 = lat.coord(d - 2, i1) + s * lat.spacing[d - 2];
        const double z2 = lat.coord(d - 1, i2) + t * lat.spacing[d - 1];
        slice_pts.push_back({z1, z2});
      }
    // merge duplicates from cells sharing a zero on a corner/edge
    const double merge_dist = 0.5 * std::min(lat.spacing[d - 2], lat.spacing[d - 1]);
    std::vector<std::array<double, 2>> merged;
    std::vector<int> counts;
    for (const auto& p : slice_pts) {
      bool hit = false;
      for (size_t m = 0; m < merged.size(); ++m) {
        if (std::hypot(merged[m][0] - p[0], merged[m][1] - p[1]) < merge_dist) {
          merged[m][0] = (merged[m][0] * counts[m] + p[0]) / (counts[m] + 1);
          merged[m][1] = (merged[m][1] * counts[m] + p[1]) / (counts[m] + 1);
          ++counts[m];
          hit = true;
          break;
        }
      }
      if (!hit) {
        merged.push_back(p);
        counts.push_back(1);
      }
    }
    for (const auto& p : merged) {
      std::vector<double> pt(d);
      // tangential coordinates of the slice
      size_t rest = isl;
      for (int a = d - 3; a >= 0; --a) {
        pt[a] = lat.coord(a, static_cast<int>(rest % lat.shape[a]));
        rest /= lat.shape[a];
      }
      pt[d - 2] = p[0];
      pt[d - 1] = p[1];
      out.push_back(std::move(pt));
    }
  }
  return out;
}

std::vector<double> graph_mean_curvature(const Lattice& tangential,
                                         const std::vector<double>& f) {
  const int n = tangential.dim();
  const size_t N = tangential.size();
  if (f.size() != 2 * N) throw ValidationError("graph_mean_curvature: bad sample layout");
  const auto& st = tangential.strides();

  std::vector<double> out(2 * N, 0.0);
  std::vector<int> idx(n);
  Eigen::MatrixXd g(n, n);
  std::vector<std::vector<double>> df(2, std::vector<double>(n));
  for (size_t i = 0; i < N; ++i) {
    tangential.unravel(i, idx);
    for (int beta = 0; beta < 2; ++beta)
      for (int j = 0; j < n; ++j)
        df[beta][j] = stencil::d1(f, beta * N + i, idx[j], tangential.shape[j], st[j],
                                  tangential.spacing[j]);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = (j == k) ? 1.0 : 0.0;
        for (int beta = 0; beta < 2; ++beta) v += df[beta][j] * df[beta][k];
        g(j, k) = v;
      }
    const Eigen::MatrixXd ginv = g.inverse();

    double hfull[2] = {0.0, 0.0};
    for (int beta = 0; beta < 2; ++beta)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double d2;
          if (j == k) {
            d2 = stencil::d2(f, beta * N + i, idx[j], tangential.shape[j], st[j],
                             tangential.spacing[j]);
          } else {
            // mixed derivative: centered difference of the first derivative
            const auto d1_at = [&](size_t node) {
              std::vector<int> id2(n);
              tangential.unravel(node, id2);
              return stencil::d1(f, beta * N + node, id2[j], tangential.shape[j], st[j],
                                 tangential.spacing[j]);
            };
            const double hk = tangential.spacing[k];
            if (idx[k] > 0 && idx[k] < tangential.shape[k] - 1)
              d2 = (d1_at(i + st[k]) - d1_at(i - st[k])) / (2 * hk);
            else if (idx[k] == 0)
              d2 = (-3 * d1_at(i) + 4 * d1_at(i + st[k]) - d1_at(i + 2 * st[k])) / (2 * hk);
            else
              d2 = (3 * d1_at(i) - 4 * d1_at(i - st[k]) + d1_at(i - 2 * st[k])) / (2 * hk);
          }
          hfull[beta] += ginv(j, k) * d2;
        }

    // remove the tangential part of the curvature vector
    for (int beta = 0; beta < 2; ++beta) {
      double corr = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double ht = 0.0;
          for (int gamma = 0; gamma < 2; ++gamma) ht += hfull[gamma] * df[gamma][k];
          corr += ginv(k, l) * ht * df[beta][l];
        }
      out[beta * N + i] = hfull[beta] - corr;
    }
  }
  return out;
}

NodalGraph fit_graph(const std::vector<std::vector<double>>& points, const Lattice& tangential,
                     const FitSettings& settings) {
  const int n = tangential.dim();
  const size_t N = tangential.size();
  const double hy = tangential.spacing[0];
  const double mv_tol =
      settings.multivalue_tolerance > 0.0 ? settings.multivalue_tolerance : 5.0 * hy;

  std::vector<double> acc(2 * N, 0.0);
  std::vector<double> zmin(2 * N, 1e300), zmax(2 * N, -1e300);
  std::vector<int> count(N, 0);
  for (const auto& p : points) {
    if (static_cast<int>(p.size()) != n + 2)
      throw ValidationError("fit_graph: point dimension mismatch");
    size_t flat = 0;
    for (int a = 0; a < n; ++a) {
      const double s = (p[a] - tangential.origin[a]) / tangential.spacing[a];
      const int i = static_cast<int>(std::lround(s));
      if (i < 0 || i >= tangential.shape[a])
        throw ValidationError("fit_graph: point outside the tangential grid");
      flat = flat * tangential.shape[a] + static_cast<size_t>(i);
    }
    for (int beta = 0; beta < 2; ++beta) {
      acc[beta * N + flat] += p[n + beta];
      zmin[beta * N + flat] = std::min(zmin[beta * N + flat], p[n + beta]);
      zmax[beta * N + flat] = std::max(zmax[beta * N + flat], p[n + beta]);
    }
    ++count[flat];
  }
  for (size_t i = 0; i < N; ++i) {
    if (count[i] == 0)
      throw ValidationError("fit_graph: insufficient coverage (empty tangential cell)");
    for (int beta = 0; beta < 2; ++beta)
      if (zmax[beta * N + i] - zmin[beta * N + i] > mv_tol)
        throw ValidationError("not graphical");
  }

  NodalGraph gph;
  gph.tan = tangential;
  gph.holder_alpha = settings.holder_alpha;
  gph.f.assign(2 * N, 0.0);
  for (size_t i = 0; i < N; ++i)
    for (int beta = 0; beta < 2; ++beta) gph.f[beta * N + i] = acc[beta * N + i] / count[i];

  // fit residual against the binned values
  for (const auto& p : points) {
    size_t flat = 0;
    for (int a = 0; a < n; ++a) {
      const int i = static_cast<int>(std::lround((p[a] - tangential.origin[a]) /
                                                  tangential.spacing[a]));
      flat = flat * tangential.shape[a] + static_cast<size_t>(i);
    }
    const double dz = std::hypot(p[n] - gph.f[flat], p[n + 1] - gph.f[N + flat]);
    gph.fit_residual = std::max(gph.fit_residual, dz);
  }

  // discrete norms
  const auto& st = tangential.strides();
  std::vector<int> idx(n);
  std::vector<std::pair<std::vector<double>, double>> second_diffs;  // (coords, value)
  for (size_t i = 0; i < N; ++i) {
    tangential.unravel(i, idx);
    for (int a = 0; a < n; ++a) {
      if (idx[a] + 1 < tangential.shape[a]) {
        double s2 = 0.0;
        for (int beta = 0; beta < 2; ++beta) {
          const double dv = gph.f[beta * N + i + st[a]] - gph.f[beta * N + i];
          s2 += dv * dv;
        }
        gph.lipschitz = std::max(gph.lipschitz, std::sqrt(s2) / tangential.spacing[a]);
      }
      if (idx[a] > 0 && idx[a] + 1 < tangential.shape[a]) {
        for (int beta = 0; beta < 2; ++beta) {
          const double d2 = (gph.f[beta * N + i + st[a]] - 2.0 * gph.f[beta * N + i] +
                             gph.f[beta * N + i - st[a]]) /
                            (tangential.spacing[a] * tangential.spacing[a]);
          gph.second_diff_sup = std::max(gph.second_diff_sup, std::abs(d2));
          std::vector<double> xc(n);
          tangential.coords(idx, xc);
          second_diffs.push_back({xc, d2});
        }
      }
    }
  }
  for (size_t i = 0; i < second_diffs.size(); ++i)
    for (size_t j = i + 1; j < second_diffs.size(); ++j) {
      double dist = 0.0;
      for (int a = 0; a < n; ++a) {
        const double dv = second_diffs[i].first[a] - second_diffs[j].first[a];
        dist += dv * dv;
      }
      dist = std::sqrt(dist);
      if (dist < 1e-12) continue;
      const double dd = std::abs(second_diffs[i].second - second_diffs[j].second);
      gph.holder_seminorm =
          std::max(gph.holder_seminorm, dd / std::pow(dist, settings.holder_alpha));
    }

  gph.mean_curvature = graph_mean_curvature(tangential, gph.f);
  return gph;
}

LevelTube modulus_level_tube(const FieldConfiguration& config, double t) {
  if (!(t > 0.0 && t < 1.0))
    throw ValidationError("modulus_level_tube: level must lie in (0, 1)");
  config.validate();
  const Lattice& lat = config.lat;
  const int d = lat.dim();
  const size_t N = lat.size();
  const size_t nz1 = lat.shape[d - 1];
  const size_t nz = static_cast<size_t>(lat.shape[d - 2]) * nz1;
  const size_t nslices = N / nz;

  LevelTube tube;
  for (size_t isl = 0; isl < nslices; ++isl) {
    std::vector<std::array<double, 2>> pts;
    bool clipped = false;
    for (int i1 = 0; i1 + 1 < lat.shape[d - 2]; ++i1)
      for (int i2 = 0; i2 + 1 < lat.shape[d - 1]; ++i2) {
        const size_t base = isl * nz + static_cast<size_t>(i1) * nz1 + i2;
        // corner values of |u| - t; corners: (0,0), (1,0), (0,1), (1,1)
        const double v00 = std::abs(config.u[base]) - t;
        const double v10 = std::abs(config.u[base + nz1]) - t;
        const double v01 = std::abs(config.u[base + 1]) - t;
        const double v11 = std::abs(config.u[base + nz1 + 1]) - t;
        auto edge = [&](double va, double vb, double xa1, double xa2, double xb1, double xb2) {
          if ((va <= 0.0) == (vb <= 0.0)) return;
          const double s = va / (va - vb);
          pts.push_back({xa1 + s * (xb1 - xa1), xa2 + s * (xb2 - xa2)});
          if (i1 == 0 || i2 == 0 || i1 + 2 == lat.shape[d - 2] || i2 + 2 == lat.shape[d - 1])
            clipped = true;
        };
        const double x1 = lat.coord(d - 2, i1), x1p = lat.coord(d - 2, i1 + 1);
        const double x2 = lat.coord(d - 1, i2), x2p = lat.coord(d - 1, i2 + 1);
        // only the lower/left edges of each cell, to avoid duplicates
        edge(v00, v10, x1, x2, x1p, x2);
        edge(v00, v01, x1, x2, x1, x2p);
        if (i1 + 2 == lat.shape[d - 2]) edge(v10, v11, x1p, x2, x1p, x2p);
        if (i2 + 2 == lat.shape[d - 1]) edge(v01, v11, x1, x2p, x1p, x2p);
      }

    LevelTube::Slice slice;
    slice.point_count = static_cast<int>(pts.size());
    slice.boundary_clipped = clipped || pts.empty();
    {
      size_t rest = isl;
      slice.y_index.assign(d - 2, 0);
      for (int a = d - 3; a >= 0; --a) {
        slice.y_index[a] = static_cast<int>(rest % lat.shape[a]);
        rest /= lat.shape[a];
      }
    }
    if (pts.size() >= 3) {
      // algebraic circle fit: minimize |x|^2 - 2 cx x - 2 cy y - c0
      Eigen::Matrix3d AtA = Eigen::Matrix3d::Zero();
      Eigen::Vector3d Atb = Eigen::Vector3d::Zero();
      for (const auto& p : pts) {
        const Eigen::Vector3d row(2.0 * p[0], 2.0 * p[1], 1.0);
        const double b = p[0] * p[0] + p[1] * p[1];
        AtA += row * row.transpose();
        Atb += row * b;
      }
      const Eigen::Vector3d sol = AtA.ldlt().solve(Atb);
      slice.center = {sol[0], sol[1]};
      const double r2 = sol[2] + sol[0] * sol[0] + sol[1] * sol[1];
      slice.radius = r2 > 0.0 ? std::sqrt(r2) : 0.0;
    }
    tube.slices.push_back(slice);

    for (const auto& p : pts) {
      std::vector<double> pt(d);
      size_t rest = isl;
      for (int a = d - 3; a >= 0; --a) {
        pt[a] = lat.coord(a, static_cast<int>(rest % lat.shape[a]));
        rest /= lat.shape[a];
      }
      pt[d - 2] = p[0];
      pt[d - 1] = p[1];
      tube.points.push_back(std::move(pt));
    }
  }
  return tube;
}

}  // namespace vortexlab
