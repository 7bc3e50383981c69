#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "hermval/estimate.hpp"
#include "hermval/random.hpp"

namespace hermval::mc {

// Thread count used by the OpenMP kernels; 0 = library default.
void set_threads(int n);
int threads();

#if defined(_OPENMP)
inline bool in_parallel() { return omp_in_parallel() != 0; }
#else
inline bool in_parallel() { return false; }
#endif

// Per-sample kernel: fills out[0..dims) from its private substream.
using SampleFn = std::function<void(RandomStream&, double*)>;

// Moment sums of a vector-valued Monte-Carlo run.  The accumulation order is
// fixed (chunked, chunks summed in index order) so results do not depend on
// the number of threads.
struct Moments {
  long long count = 0;
  std::vector<double> sum;         // dims
  std::vector<double> cross;       // dims x dims, row major: sum of x x^T

  int dims() const { return static_cast<int>(sum.size()); }

  double mean(int i) const { return sum[i] / double(count); }

  // Covariance of the sample mean, entry (i,j).
  double mean_cov(int i, int j) const {
    const double n = double(count);
    const int d = dims();
    const double c = (cross[i * d + j] - sum[i] * sum[j] / n) / (n - 1.0);
    return c / n;
  }

  double std_error(int i) const {
    if (count < 2) return 0.0;
    return std::sqrt(std::max(0.0, mean_cov(i, i)));
  }

  Estimate estimate(int i, std::uint64_t seed) const {
    return Estimate{mean(i), std_error(i), count, seed};
  }
};

namespace detail {
constexpr long long kChunk = 1024;

inline void run_chunk(long long begin, long long end, int dims,
                      const RandomStream& base, const SampleFn& fn,
                      double* sum, double* cross) {
  std::vector<double> x(dims);
  for (long long i = begin; i < end; ++i) {
    RandomStream rs = base.substream(static_cast<std::uint64_t>(i));
    fn(rs, x.data());
    for (int a = 0; a < dims; ++a) {
      sum[a] += x[a];
      for (int b = 0; b < dims; ++b) cross[a * dims + b] += x[a] * x[b];
    }
  }
}
}  // namespace detail

// Serial reference implementation.  Kept alongside the OpenMP kernel for
// testing and benchmarking; both produce bit-identical Moments.
inline Moments accumulate_serial(long long n, int dims, const RandomStream& base,
                                 const SampleFn& fn) {
  Moments m;
  m.count = n;
  m.sum.assign(dims, 0.0);
  m.cross.assign(std::size_t(dims) * dims, 0.0);
  const long long nchunks = (n + detail::kChunk - 1) / detail::kChunk;
  std::vector<double> csum(std::size_t(nchunks) * dims, 0.0);
  std::vector<double> ccross(std::size_t(nchunks) * dims * dims, 0.0);
  for (long long c = 0; c < nchunks; ++c) {
    const long long b = c * detail::kChunk;
    detail::run_chunk(b, std::min(n, b + detail::kChunk), dims, base, fn,
                      &csum[std::size_t(c) * dims],
                      &ccross[std::size_t(c) * dims * dims]);
  }
  for (long long c = 0; c < nchunks; ++c) {
    for (int a = 0; a < dims; ++a) m.sum[a] += csum[std::size_t(c) * dims + a];
    for (int a = 0; a < dims * dims; ++a)
      m.cross[a] += ccross[std::size_t(c) * dims * dims + a];
  }
  return m;
}

// OpenMP kernel.  Chunk-local sums are computed in parallel and reduced in
// chunk order, so the result matches accumulate_serial exactly.  Falls back
// to the serial path when already inside a parallel region (nested MC loops
// parallelize at the outermost level only).
Moments accumulate(long long n, int dims, const RandomStream& base,
                   const SampleFn& fn);

// Scalar convenience wrapper.
inline Estimate mean_estimate(long long n, const RandomStream& base,
                              const std::function<double(RandomStream&)>& fn) {
  Moments m = accumulate(n, 1, base,
                         [&](RandomStream& rs, double* out) { out[0] = fn(rs); });
  return m.estimate(0, base.seed());
}

}  // namespace hermval::mc
