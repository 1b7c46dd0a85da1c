#include "fieldkit/init.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fieldkit/errors.hpp"
#include "fieldkit/likelihood.hpp"
#include "fieldkit/parallel.hpp"

namespace fieldkit {

std::vector<double> init_two_echo(const MultiEchoImages& y, const SensitivityMaps& s, const EchoTimes& t,
                                  const Mask& mask) {
  if (!(y.dims() == s.dims()) || !(y.dims() == mask.dims()) || y.coils() != s.coils())
    throw std::invalid_argument("images, sensitivities and mask disagree in shape");
  const double dt = t[1] - t[0];
  if (!(dt != 0.0)) throw std::invalid_argument("first two echo times coincide");
  std::vector<double> w(mask.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sk = 0; sk < std::ptrdiff_t(mask.size()); ++sk) {
    const std::size_t j = mask.voxel(std::size_t(sk));
    cdouble a = 0.0, b = 0.0;
    for (int c = 0; c < y.coils(); ++c) {
      a += std::conj(s(c, j)) * y(c, 0, j);
      b += std::conj(s(c, j)) * y(c, 1, j);
    }
    w[sk] = std::arg(std::conj(a) * b) / dt;
  }
  return w;
}

std::vector<double> sweep_grid(const SignalBasis& basis, int grid) {
  if (grid < 2) throw std::invalid_argument("sweep grid needs at least two points");
  if (!basis.fat) throw std::invalid_argument("sweep initialization requires a water-fat basis");
  const double half = 0.5 * std::abs(basis.fat->mean_shift_hz()) * 2.0 * std::numbers::pi;
  std::vector<double> g(grid);
  for (int i = 0; i < grid; ++i) g[i] = -half + 2.0 * half * double(i) / double(grid - 1);
  return g;
}

std::vector<double> init_sweep(const PairTermCache& cache, const SweepConfig& cfg) {
  const auto grid = sweep_grid(cache.basis, cfg.grid);
  const std::size_t P = cache.pairs.size();
  std::vector<double> w(cache.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sk = 0; sk < std::ptrdiff_t(cache.size()); ++sk) {
    const std::size_t k = std::size_t(sk);
    double best = 0.0, best_cost = 0.0;
    bool first = true;
    for (double cand : grid) {
      // c0 and K0 do not depend on omega; compare the varying part only.
      double cost = 0.0;
      for (std::size_t p = 0; p < P; ++p) {
        const cdouble R = cache.R[k * P + p];
        const double th = cand * cache.pairs[p].dt;
        cost -= 2.0 * (R.real() * std::cos(th) - R.imag() * std::sin(th));
      }
      if (first || cost < best_cost || (cost == best_cost && std::abs(cand) < std::abs(best))) {
        best = cand;
        best_cost = cost;
        first = false;
      }
    }
    w[k] = best;
  }
  return w;
}

std::vector<double> init_pwls(std::span<const double> omega_tilde, std::span<const double> rho,
                              const DifferenceOperator& C, double beta, int iterations,
                              std::vector<double>* residual_norms) {
  const std::size_t n = omega_tilde.size();
  if (rho.size() != n || C.cols() != n) throw std::invalid_argument("PWLS inputs differ in length");
  if (iterations < 0) throw std::invalid_argument("CG iteration count must be >= 0");
  bool any_weight = false;
  for (double r : rho) {
    if (!(r >= 0.0)) throw std::invalid_argument("PWLS weights must be nonnegative");
    any_weight = any_weight || r > 0.0;
  }
  if (!any_weight && !(beta > 0.0)) throw NumericalError("PWLS system is singular (zero weights, beta = 0)");

  auto apply = [&](std::span<const double> x) {
    std::vector<double> y = beta > 0.0 ? C.normal(x) : std::vector<double>(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) y[k] = beta * y[k] + 2.0 * rho[k] * x[k];
    return y;
  };

  std::vector<double> x(omega_tilde.begin(), omega_tilde.end());
  std::vector<double> r(n);
  {
    const auto ax = apply(x);
    for (std::size_t k = 0; k < n; ++k) r[k] = 2.0 * rho[k] * omega_tilde[k] - ax[k];
  }
  std::vector<double> p = r;
  double rr = dot(r, r);
  if (residual_norms) residual_norms->assign(1, std::sqrt(rr));
  for (int it = 0; it < iterations && rr > 0.0; ++it) {
    const auto ap = apply(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double a = rr / pap;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += a * p[k];
      r[k] -= a * ap[k];
    }
    const double rr_next = dot(r, r);
    if (residual_norms) residual_norms->push_back(std::sqrt(rr_next));
    const double b = rr_next / rr;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + b * p[k];
    rr = rr_next;
  }
  return x;
}

}  // namespace fieldkit
