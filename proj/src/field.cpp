#include "vortexlab/field.hpp"

#include <cmath>
#include <string>

#include "vortexlab/util.hpp"

namespace vortexlab {

FieldConfiguration FieldConfiguration::zeros(const Lattice& lat, double epsilon) {
  if (epsilon <= 0.0) throw ValidationError("FieldConfiguration: epsilon must be positive");
  FieldConfiguration c;
  c.lat = lat;
  c.u.assign(lat.size(), cplx(0.0, 0.0));
  c.A.assign(lat.size() * lat.dim(), 0.0);
  c.epsilon = epsilon;
  return c;
}

FieldConfiguration FieldConfiguration::vacuum(const Lattice& lat, double epsilon) {
  FieldConfiguration c = zeros(lat, epsilon);
  for (auto& v : c.u) v = cplx(1.0, 0.0);
  return c;
}

void FieldConfiguration::validate() const {
  const size_t n = lat.size();
  if (epsilon <= 0.0) throw ValidationError("FieldConfiguration: epsilon must be positive");
  if (u.size() != n) throw ValidationError("FieldConfiguration: u size does not match grid");
  if (A.size() != n * lat.dim())
    throw ValidationError("FieldConfiguration: A size does not match grid");
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(u[i].real()) || !std::isfinite(u[i].imag()))
      throw ValidationError("FieldConfiguration: non-finite u at node " + std::to_string(i));
  }
  for (size_t i = 0; i < A.size(); ++i) {
    if (!std::isfinite(A[i]))
      throw ValidationError("FieldConfiguration: non-finite A at node " +
                            std::to_string(i % n) + " component " + std::to_string(i / n));
  }
}

Perturbation Perturbation::zeros(const Lattice& lat) {
  Perturbation p;
  p.phi.assign(lat.size(), cplx(0.0, 0.0));
  p.omega.assign(lat.size() * lat.dim(), 0.0);
  return p;
}

size_t Perturbation::node_count(const Lattice& lat) const {
  (void)lat;
  return phi.size();
}

namespace {

// Product trapezoidal weight of a node.
double trap_weight(const Lattice& lat, const std::vector<int>& idx) {
  double w = 1.0;
  for (int a = 0; a < lat.dim(); ++a) {
    w *= lat.spacing[a];
    if (idx[a] == 0 || idx[a] == lat.shape[a] - 1) w *= 0.5;
  }
  return w;
}

}  // namespace

double inner_eps(const Lattice& lat, double epsilon, const Perturbation& p,
                 const Perturbation& q) {
  const size_t n = lat.size();
  const int d = lat.dim();
  const double e2 = epsilon * epsilon;
  std::vector<int> idx(d);
  return pairwise_sum_of(n, [&](size_t i) {
    lat.unravel(i, idx);
    double v = herm(p.phi[i], q.phi[i]);
    for (int c = 0; c < d; ++c) v += e2 * p.omega[c * n + i] * q.omega[c * n + i];
    return v * trap_weight(lat, idx);
  });
}

double norm_eps(const Lattice& lat, double epsilon, const Perturbation& p) {
  return std::sqrt(inner_eps(lat, epsilon, p, p));
}

double sup_norm(const Perturbation& p) {
  double m = 0.0;
  for (const auto& v : p.phi) m = std::max(m, std::abs(v));
  for (double v : p.omega) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace vortexlab
