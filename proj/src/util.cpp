#include "vortexlab/util.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <thread>

namespace vortexlab {

double pairwise_sum(size_t lo, size_t hi, const std::function<double(size_t)>& f) {
  const size_t n = hi - lo;
  if (n <= 64) {
    double s = 0.0;
    for (size_t i = lo; i < hi; ++i) s += f(i);
    return s;
  }
  const size_t mid = lo + n / 2;
  return pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f);
}

namespace {
std::atomic<int> g_workers{1};
}

void set_worker_count(int n) { g_workers.store(n < 1 ? 1 : n); }
int worker_count() { return g_workers.load(); }

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& range_body) {
  const int nw = worker_count();
  if (nw <= 1 || n < 4096) {
    range_body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const size_t chunk = (n + nw - 1) / nw;
  for (int w = 0; w < nw; ++w) {
    const size_t lo = w * chunk;
    if (lo >= n) break;
    const size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&range_body, lo, hi] { range_body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

double smoothstep5(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double smoothstep5_d1(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 30.0 * s * s * (1.0 - s) * (1.0 - s);
}

double smoothstep5_d2(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
}

double smoothstep5_d3(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 60.0 * (1.0 - 6.0 * s + 6.0 * s * s);
}

uint64_t fnv1a64(const void* data, size_t nbytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < nbytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file for checksum: " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("lsq_slope: need >= 2 samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw NumericalError("lsq_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace vortexlab
