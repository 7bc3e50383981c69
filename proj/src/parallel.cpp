#include "hermval/parallel.hpp"

#include <atomic>

namespace hermval::mc {

namespace {
std::atomic<int> g_threads{0};
}

void set_threads(int n) { g_threads.store(n); }
int threads() { return g_threads.load(); }

Moments accumulate(long long n, int dims, const RandomStream& base,
                   const SampleFn& fn) {
  if (in_parallel() || n < 2 * detail::kChunk)
    return accumulate_serial(n, dims, base, fn);

  Moments m;
  m.count = n;
  m.sum.assign(dims, 0.0);
  m.cross.assign(std::size_t(dims) * dims, 0.0);
  const long long nchunks = (n + detail::kChunk - 1) / detail::kChunk;
  std::vector<double> csum(std::size_t(nchunks) * dims, 0.0);
  std::vector<double> ccross(std::size_t(nchunks) * dims * dims, 0.0);

#if defined(_OPENMP)
  const int req = g_threads.load();
#pragma omp parallel for schedule(dynamic) num_threads(req > 0 ? req : omp_get_max_threads())
  for (long long c = 0; c < nchunks; ++c) {
    const long long b = c * detail::kChunk;
    detail::run_chunk(b, std::min(n, b + detail::kChunk), dims, base, fn,
                      &csum[std::size_t(c) * dims],
                      &ccross[std::size_t(c) * dims * dims]);
  }
#else
  for (long long c = 0; c < nchunks; ++c) {
    const long long b = c * detail::kChunk;
    detail::run_chunk(b, std::min(n, b + detail::kChunk), dims, base, fn,
                      &csum[std::size_t(c) * dims],
                      &ccross[std::size_t(c) * dims * dims]);
  }
#endif

  // Chunk partials are reduced in index order: thread count cannot change
  // the result.
  for (long long c = 0; c < nchunks; ++c) {
    for (int a = 0; a < dims; ++a) m.sum[a] += csum[std::size_t(c) * dims + a];
    for (int a = 0; a < dims * dims; ++a)
      m.cross[a] += ccross[std::size_t(c) * dims * dims + a];
  }
  return m;
}

}  // namespace hermval::mc
