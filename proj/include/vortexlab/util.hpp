#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vortexlab {

// Thrown on bad user input (CLI maps this to exit code 2).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on solver/numerical failure (CLI maps this to exit code 3).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic pairwise tree summation of f(i) for i in [lo, hi).
// Summation order depends only on the index range, never on thread count.
double pairwise_sum(size_t lo, size_t hi, const std::function<double(size_t)>& f);

template <typename F>
double pairwise_sum_of(size_t n, F&& f) {
  std::function<double(size_t)> fn = std::forward<F>(f);
  return pairwise_sum(0, n, fn);
}

// Worker cap for stencil sweeps. 1 = serial. Set once by the CLI (--threads /
// VORTEXLAB_THREADS); results are identical for any value.
void set_worker_count(int n);
int worker_count();

// Parallel map over [0, n): body(i) must write only to location i-owned data.
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& range_body);

// Quintic smoothstep: 0 for s <= 0, 1 for s >= 1, C^2 monotone in between.
double smoothstep5(double s);
double smoothstep5_d1(double s);
double smoothstep5_d2(double s);
double smoothstep5_d3(double s);

// FNV-1a 64-bit, used for output checksums in run manifests.
uint64_t fnv1a64(const void* data, size_t nbytes);
uint64_t fnv1a64_file(const std::string& path);

// Volume of the unit n-ball.
double unit_ball_volume(int n);

// Least-squares slope of y against x.
double lsq_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vortexlab
