#include <doctest.h>

#include <cstdlib>
#include <numeric>

#include "fieldkit/likelihood.hpp"
#include "fieldkit/parallel.hpp"
#include "support.hpp"

using namespace fieldkit;

TEST_CASE("blocked reduction is independent of the thread count") {
  std::mt19937_64 rng(1);
  const auto v = testing::random_vector(rng, 100003, 1e3);
  const double serial = reduce_sum_serial(v.size(), [&](std::size_t k) { return v[k]; });
  const int saved = thread_count();
  for (int t : {1, 2, 3, 4, 7}) {
    set_thread_count(t);
    const double par = reduce_sum(v.size(), [&](std::size_t k) { return v[k]; });
    CHECK(par == serial);
  }
  set_thread_count(saved);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  CHECK(pairwise_sum(std::vector<double>{1.0, 2.0, 3.0}) == 6.0);
  CHECK(serial == doctest::Approx(std::accumulate(v.begin(), v.end(), 0.0)).epsilon(1e-10));
}

TEST_CASE("likelihood kernels are bitwise identical across thread counts") {
  const auto in = testing::random_instance(3, Mode::waterfat, 4, 2, {9, 8, 6});
  const auto cache = precompute_cache(in.y, in.s, in.basis, in.t, in.mask);
  std::mt19937_64 rng(2);
  const auto w = testing::random_vector(rng, cache.size(), 100.0);
  const int saved = thread_count();
  set_thread_count(1);
  const double c1 = cost_phi(cache, w);
  const auto g1 = grad_phi(cache, w);
  set_thread_count(4);
  CHECK(cost_phi(cache, w) == c1);
  CHECK(grad_phi(cache, w) == g1);
  const auto cache4 = precompute_cache(in.y, in.s, in.basis, in.t, in.mask);
  CHECK(cache4.R == cache.R);
  set_thread_count(saved);
}

TEST_CASE("environment variable overrides the requested thread count") {
  const int saved = thread_count();
  setenv("FIELDKIT_THREADS", "3", 1);
  configure_threads(1);
  CHECK(thread_count() == 3);
  setenv("FIELDKIT_THREADS", "zero", 1);
  CHECK_THROWS_AS(configure_threads(1), std::invalid_argument);
  unsetenv("FIELDKIT_THREADS");
  configure_threads(2);
  CHECK(thread_count() == 2);
  set_thread_count(saved);
}
