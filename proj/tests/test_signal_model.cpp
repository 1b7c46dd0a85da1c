#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fieldkit/errors.hpp"
#include "support.hpp"

using namespace fieldkit;
using testing::random_instance;

namespace {

Eigen::MatrixXcd gamma_matrix(const SignalBasis& b) {
  Eigen::MatrixXcd g(b.echoes, b.components);
  for (int l = 0; l < b.echoes; ++l)
    for (int k = 0; k < b.components; ++k) g(l, k) = b.g(l, k);
  return g;
}

Eigen::MatrixXcd projector_matrix(const SignalBasis& b) {
  Eigen::MatrixXcd P(b.echoes, b.echoes);
  for (int m = 0; m < b.echoes; ++m)
    for (int n = 0; n < b.echoes; ++n) P(m, n) = b.Gamma(m, n);
  return P;
}

}  // namespace

TEST_CASE("echo times validate ordering and count") {
  CHECK_THROWS_AS(EchoTimes({0.0}), std::invalid_argument);
  CHECK_THROWS_AS(EchoTimes({0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(EchoTimes({0.002, 0.001}), std::invalid_argument);
  CHECK_THROWS_AS(EchoTimes({0.0, std::nan("")}), std::invalid_argument);
  const EchoTimes t({0.0, 0.002, 0.010});
  REQUIRE(t.pairs().size() == 3);
  CHECK(t.pairs()[0].m == 0);
  CHECK(t.pairs()[0].n == 1);
  CHECK(t.pairs()[0].dt == doctest::Approx(-0.002));
  CHECK(t.pairs()[2].dt == doctest::Approx(-0.008));
}

TEST_CASE("fat model normalizes amplitudes") {
  const FatModel f({{2.0, -400.0}, {6.0, -300.0}});
  CHECK(f.peaks()[0].amplitude == doctest::Approx(0.25));
  CHECK(f.mean_shift_hz() == doctest::Approx(-325.0));
  CHECK(std::abs(f.signature(0.0) - cdouble(1.0, 0.0)) < 1e-14);
  const FatModel six = FatModel::six_peak(3.0);
  CHECK(six.peaks().size() == 6);
  double sum = 0.0;
  for (const auto& p : six.peaks()) sum += p.amplitude;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(six.peaks()[1].shift_hz == doctest::Approx(-3.40 * 42.577478 * 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(FatModel({}), std::invalid_argument);
}

TEST_CASE("field-map basis: Gamma is the uniform averaging projector") {
  const auto b = build_gamma(Mode::fieldmap, EchoTimes({0.0, 0.002, 0.010}));
  CHECK(b.components == 1);
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) CHECK(std::abs(b.Gamma(m, n) - cdouble(1.0 / 3.0)) < 1e-15);
  CHECK_THROWS_AS(build_gamma(Mode::fieldmap, EchoTimes({0.0, 0.001}), FatModel::single_peak(-420.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_gamma(Mode::waterfat, EchoTimes({0.0, 0.001})), std::invalid_argument);
}

TEST_CASE("projector is Hermitian, idempotent, rank K, and reproduces gamma") {
  for (const int L : {2, 3, 4, 8}) {
    std::vector<double> tv;
    for (int l = 0; l < L; ++l) tv.push_back(0.0015 + 0.0023 * l);
    for (const Mode mode : {Mode::fieldmap, Mode::waterfat}) {
      if (mode == Mode::waterfat && L < 2) continue;
      const EchoTimes t(tv);
      std::optional<FatModel> fat;
      if (mode == Mode::waterfat) fat = FatModel::six_peak(3.0);
      const auto b = build_gamma(mode, t, fat);
      const auto P = projector_matrix(b);
      const auto g = gamma_matrix(b);
      CHECK((P - P.adjoint()).norm() < 1e-12);
      CHECK((P * P - P).norm() < 1e-12);
      CHECK(std::abs(P.trace() - cdouble(b.components)) < 1e-12);
      CHECK((P * g - g).norm() < 1e-12);
      Eigen::MatrixXcd pinv(b.components, L);
      for (int k = 0; k < b.components; ++k)
        for (int l = 0; l < L; ++l) pinv(k, l) = b.pinv[std::size_t(k) * L + l];
      CHECK((pinv * g - Eigen::MatrixXcd::Identity(b.components, b.components)).norm() < 1e-10);
    }
  }
}

TEST_CASE("degenerate water-fat basis is a numerical error") {
  CHECK_THROWS_AS(build_gamma(Mode::waterfat, EchoTimes({0.0, 0.001, 0.002}), FatModel::single_peak(0.0)),
                  NumericalError);
  // A shift that aliases to zero at every echo.
  CHECK_THROWS_AS(build_gamma(Mode::waterfat, EchoTimes({0.0, 0.001, 0.002}), FatModel::single_peak(1000.0)),
                  NumericalError);
}

TEST_CASE("multi-echo image and sensitivity validation") {
  const Dims d{2, 2, 1};
  CHECK_THROWS_AS(MultiEchoImages(d, 1, 2, std::vector<cdouble>(3)), std::invalid_argument);
  std::vector<cdouble> bad(8, 1.0);
  bad[3] = {std::nan(""), 0.0};
  CHECK_THROWS_AS(MultiEchoImages(d, 1, 2, bad), std::invalid_argument);
  const auto ones = SensitivityMaps::ones(d);
  CHECK(ones.coils() == 1);
  CHECK(ones.ssq(3) == 1.0);
  SensitivityMaps s(d, 2, {1.0, 0.0, cdouble(0, 2), 1.0, 1.0, 0.0, 0.0, cdouble(3, 4)});
  CHECK(s.ssq(0) == doctest::Approx(2.0));
  CHECK(s.ssq(1) == doctest::Approx(0.0));
  CHECK(s.ssq(2) == doctest::Approx(4.0));
  CHECK(s.ssq(3) == doctest::Approx(26.0));
}

TEST_CASE("cache entries match direct r-term sums from raw data") {
  for (const Mode mode : {Mode::fieldmap, Mode::waterfat})
    for (const int coils : {1, 3}) {
      const auto in = random_instance(11 + coils, mode, 4, coils, {4, 3, 2});
      const auto cache = precompute_cache(in.y, in.s, in.basis, in.t, in.mask);
      CHECK(cache.size() == in.mask.size());
      const int L = 4;
      for (std::size_t j = 0; j < in.dims.voxels(); ++j) {
        const double ssq = in.s.ssq(j);
        double rho = 0.0, dmax = 0.0, c0 = 0.0;
        for (int m = 0; m < L; ++m)
          for (int n = 0; n < L; ++n) {
            cdouble Rsum = 0.0;
            double Ksum = 0.0;
            for (int c = 0; c < coils; ++c)
              for (int d = 0; d < coils; ++d) {
                const cdouble r = in.basis.Gamma(m, n) / ssq * std::conj(std::conj(in.s(c, j)) * in.y(c, m, j)) *
                                  (std::conj(in.s(d, j)) * in.y(d, n, j));
                const cdouble got = cache.r(c, d, m, n, j);
                if (in.mask.contains(j))
                  CHECK(std::abs(got - r) <= 1e-12 * (1.0 + std::abs(r)));
                else
                  CHECK(got == cdouble(0.0));
                Rsum += r;
                Ksum += std::abs(r);
                rho += std::abs(r);
                dmax += std::abs(r) * std::pow(in.t[m] - in.t[n], 2);
                if (m == n) c0 += std::abs(r) - r.real();
              }
            if (m < n && in.mask.contains(j)) {
              std::size_t p = 0;
              while (!(cache.pairs[p].m == m && cache.pairs[p].n == n)) ++p;
              CHECK(std::abs(cache.pair_sum(p, j) - Rsum) <= 1e-11 * (1.0 + std::abs(Rsum)));
              CHECK(cache.pair_abs_sum(p, j) == doctest::Approx(Ksum).epsilon(1e-11));
            }
          }
        if (!in.mask.contains(j)) continue;
        const auto k = std::size_t(in.mask.slot(j));
        CHECK(cache.rho[k] == doctest::Approx(rho).epsilon(1e-11));
        CHECK(cache.dmax[k] == doctest::Approx(dmax).epsilon(1e-11));
        CHECK(cache.c0[k] == doctest::Approx(c0).epsilon(1e-9).scale(rho));
      }
    }
}

TEST_CASE("r-terms pair with their conjugates") {
  const auto in = random_instance(5, Mode::waterfat, 3, 2, {3, 3, 1});
  const auto cache = precompute_cache(in.y, in.s, in.basis, in.t, in.mask);
  for (std::size_t j : in.mask.voxels())
    for (int c = 0; c < 2; ++c)
      for (int d = 0; d < 2; ++d)
        for (int m = 0; m < 3; ++m)
          for (int n = 0; n < 3; ++n)
            CHECK(std::abs(cache.r(d, c, n, m, j) - std::conj(cache.r(c, d, m, n, j))) < 1e-12);
}

TEST_CASE("cache preconditions") {
  auto in = random_instance(3, Mode::fieldmap, 3, 2, {3, 2, 1});
  CHECK_THROWS_AS(precompute_cache(in.y, in.s, in.basis, in.t, Mask(in.dims, std::vector<std::uint8_t>(6, 0))),
                  std::invalid_argument);
  std::vector<cdouble> sd(in.s.data().begin(), in.s.data().end());
  sd[0] = 0.0;
  sd[6] = 0.0;
  const SensitivityMaps dead(in.dims, 2, sd);
  CHECK_THROWS_AS(precompute_cache(in.y, dead, in.basis, in.t, Mask::full(in.dims)), std::invalid_argument);
  const auto other = build_gamma(Mode::fieldmap, EchoTimes({0.0, 0.001}));
  CHECK_THROWS_AS(precompute_cache(in.y, in.s, other, in.t, in.mask), std::invalid_argument);
}

TEST_CASE("forward model applies phase, coil and basis") {
  const Dims d{2, 1, 1};
  const EchoTimes t({0.0, 0.001, 0.003});
  const auto b = build_gamma(Mode::waterfat, t, FatModel::single_peak(-440.0));
  SensitivityMaps s(d, 1, {cdouble(1, 1), cdouble(0.5, 0)});
  const std::vector<cdouble> x{2.0, cdouble(0, 1), 1.0, 3.0};  // water[2], fat[2]
  const std::vector<double> w{100.0, -50.0};
  const auto y = forward_model(x, w, s, t, b);
  for (int l = 0; l < 3; ++l)
    for (std::size_t j = 0; j < 2; ++j) {
      const cdouble sig = x[j] + x[2 + j] * std::polar(1.0, 2.0 * std::numbers::pi * -440.0 * t[l]);
      const cdouble expect = std::polar(1.0, w[j] * t[l]) * s(0, j) * sig;
      CHECK(std::abs(y(0, l, j) - expect) < 1e-12);
    }
}
