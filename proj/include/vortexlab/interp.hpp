#pragma once

#include <cmath>
#include <vector>

#include "vortexlab/util.hpp"

namespace vortexlab {

/// Shape-preserving cubic Hermite interpolation on a strictly increasing
/// abscissa. Slopes are taken from the caller (exact derivative samples when
/// available) and clamped by the Fritsch-Carlson limiter so a monotone data
/// set yields a monotone interpolant.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> slope)
      : x_(std::move(x)), y_(std::move(y)), m_(std::move(slope)) {
    if (x_.size() < 2 || x_.size() != y_.size() || x_.size() != m_.size())
      throw ValidationError("MonotoneCubic: inconsistent sample arrays");
    clamp_slopes();
  }

  /// Slopes estimated from the data (three-point formulas) when no
  /// derivative samples exist.
  static MonotoneCubic from_values(std::vector<double> x, std::vector<double> y) {
    const size_t n = x.size();
    if (n < 2) throw ValidationError("MonotoneCubic: need >= 2 samples");
    std::vector<double> m(n);
    for (size_t i = 0; i < n; ++i) {
      if (i == 0)
        m[i] = (y[1] - y[0]) / (x[1] - x[0]);
      else if (i == n - 1)
        m[i] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
      else
        m[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
    }
    return MonotoneCubic(std::move(x), std::move(y), std::move(m));
  }

  double operator()(double t) const {
    const size_t k = cell(t);
    const double h = x_[k + 1] - x_[k];
    const double s = (t - x_[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y_[k] + h * h10 * m_[k] + h01 * y_[k + 1] + h * h11 * m_[k + 1];
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  size_t cell(double t) const {
    if (t <= x_.front()) return 0;
    if (t >= x_.back()) return x_.size() - 2;
    // uniform fast path
    const double h0 = x_[1] - x_[0];
    size_t k = static_cast<size_t>((t - x_.front()) / h0);
    if (k >= x_.size() - 1) k = x_.size() - 2;
    if (x_[k] <= t && t <= x_[k + 1]) return k;
    // fallback: binary search for non-uniform abscissae
    size_t lo = 0, hi = x_.size() - 2;
    while (lo < hi) {
      const size_t mid = (lo + hi + 1) / 2;
      if (x_[mid] <= t)
        lo = mid;
      else
        hi = mid - 1;
    }
    return lo;
  }

  void clamp_slopes() {
    const size_t n = x_.size();
    for (size_t k = 0; k + 1 < n; ++k) {
      const double d = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);
      if (d == 0.0) continue;
      const double a = m_[k] / d, b = m_[k + 1] / d;
      if (a < 0.0) m_[k] = 0.0;
      if (b < 0.0) m_[k + 1] = 0.0;
      if (a > 3.0) m_[k] = 3.0 * d;
      if (b > 3.0) m_[k + 1] = 3.0 * d;
    }
  }

  std::vector<double> x_, y_, m_;
};

}  // namespace vortexlab
