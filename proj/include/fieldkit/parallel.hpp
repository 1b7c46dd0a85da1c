#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fieldkit {

// Worker threads used by the voxel-parallel kernels.
int thread_count();
void set_thread_count(int n);
// FIELDKIT_THREADS if set (must be a positive integer), otherwise `requested`
// (0 keeps the OpenMP default).
void configure_threads(int requested);

inline constexpr std::size_t kReduceBlock = 256;

// Pairwise (tree) sum. Result depends only on the input order.
double pairwise_sum(std::span<const double> v);

// Sum of term(k) for k in [0, n). Terms are accumulated serially inside
// fixed-size blocks, then block sums are combined by pairwise_sum, so the
// result is bitwise independent of the thread count.
template <class Term>
double reduce_sum(std::size_t n, Term&& term) {
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < std::ptrdiff_t(blocks); ++b) {
    const std::size_t lo = std::size_t(b) * kReduceBlock;
    const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += term(k);
    partial[b] = s;
  }
  return pairwise_sum(partial);
}

// Serial twin of reduce_sum with identical association order.
template <class Term>
double reduce_sum_serial(std::size_t n, Term&& term) {
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(blocks, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * kReduceBlock;
    const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += term(k);
    partial[b] = s;
  }
  return pairwise_sum(partial);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return reduce_sum(a.size(), [&](std::size_t k) { return a[k] * b[k]; });
}

}  // namespace fieldkit
