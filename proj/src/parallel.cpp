#include "fieldkit/parallel.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include <omp.h>

namespace fieldkit {

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

void configure_threads(int requested) {
  if (const char* env = std::getenv("FIELDKIT_THREADS")) {
    const std::string text(env);
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || n < 1)
      throw std::invalid_argument("FIELDKIT_THREADS must be a positive integer, got '" + text + "'");
    set_thread_count(n);
    return;
  }
  if (requested < 0) throw std::invalid_argument("thread count must be >= 0");
  set_thread_count(requested);
}

namespace {

double tree(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  if (n == 2) return v[0] + v[1];
  const std::size_t half = n / 2;
  return tree(v, half) + tree(v + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> v) { return tree(v.data(), v.size()); }

}  // namespace fieldkit
