#include "fieldkit/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fieldkit/parallel.hpp"

namespace fieldkit {

double wrap_phase(double u) {
  double r = std::remainder(u, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

double wrapped_sinc(double u) {
  const double w = wrap_phase(u);
  if (std::abs(w) < 1e-9) return 1.0 - w * w / 6.0;
  return std::sin(w) / w;
}

namespace {

void check(const PairTermCache& cache, std::span<const double> omega) {
  if (omega.size() != cache.size()) throw std::invalid_argument("field map length does not match the cache mask");
}

double voxel_phi(const PairTermCache& c, std::size_t k, double w) {
  const std::size_t P = c.pairs.size();
  double s = c.c0[k];
  for (std::size_t p = 0; p < P; ++p) {
    const cdouble R = c.R[k * P + p];
    const double th = w * c.pairs[p].dt;
    s += 2.0 * (c.K0[k * P + p] - (R.real() * std::cos(th) - R.imag() * std::sin(th)));
  }
  return s;
}

double voxel_grad(const PairTermCache& c, std::size_t k, double w) {
  const std::size_t P = c.pairs.size();
  double s = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    const cdouble R = c.R[k * P + p];
    const double dt = c.pairs[p].dt;
    const double th = w * dt;
    s += 2.0 * dt * (R.real() * std::sin(th) + R.imag() * std::cos(th));
  }
  return s;
}

double voxel_curvature(const PairTermCache& c, std::size_t k, double w) {
  const std::size_t L = std::size_t(c.echoes), Nc = std::size_t(c.coils);
  const double inv = 1.0 / c.ssq[k];
  double s = 0.0;
  for (const auto& pr : c.pairs) {
    const double g_abs = std::abs(pr.gamma);
    if (g_abs == 0.0) continue;
    const double base = std::arg(pr.gamma) + w * pr.dt;
    const double scale = 2.0 * g_abs * inv * pr.dt * pr.dt;
    const std::size_t om = (k * L + pr.m) * Nc, on = (k * L + pr.n) * Nc;
    for (std::size_t cc = 0; cc < Nc; ++cc) {
      const double am = c.w_abs[om + cc];
      if (am == 0.0) continue;
      const double phm = base - c.w_arg[om + cc];
      double t = 0.0;
      for (std::size_t d = 0; d < Nc; ++d) t += c.w_abs[on + d] * wrapped_sinc(phm + c.w_arg[on + d]);
      s += scale * am * t;
    }
  }
  return s;
}

}  // namespace

double cost_phi(const PairTermCache& cache, std::span<const double> omega) {
  check(cache, omega);
  return reduce_sum(cache.size(), [&](std::size_t k) { return voxel_phi(cache, k, omega[k]); });
}

std::vector<double> grad_phi(const PairTermCache& cache, std::span<const double> omega) {
  check(cache, omega);
  std::vector<double> g(cache.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < std::ptrdiff_t(g.size()); ++k) g[k] = voxel_grad(cache, k, omega[k]);
  return g;
}

CostReport cost_psi(const PairTermCache& cache, const DifferenceOperator& C, double beta,
                    std::span<const double> omega) {
  CostReport r;
  r.phi = cost_phi(cache, omega);
  r.reg = C.norm_sq(omega);
  r.psi = r.phi + 0.5 * beta * r.reg;
  return r;
}

std::vector<double> grad_psi(const PairTermCache& cache, const DifferenceOperator& C, double beta,
                             std::span<const double> omega) {
  auto g = grad_phi(cache, omega);
  if (beta != 0.0) {
    const auto ctc = C.normal(omega);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += beta * ctc[k];
  }
  return g;
}

std::vector<double> curvatures(const PairTermCache& cache, std::span<const double> omega) {
  check(cache, omega);
  std::vector<double> d(cache.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < std::ptrdiff_t(d.size()); ++k) d[k] = voxel_curvature(cache, k, omega[k]);
  return d;
}

LineTerms line_terms(const PairTermCache& cache, std::span<const double> omega, std::span<const double> z,
                     double alpha) {
  check(cache, omega);
  check(cache, z);
  const std::size_t n = cache.size();
  // Two reductions share one pass through per-voxel buffers.
  std::vector<double> slope(n), curv(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sk = 0; sk < std::ptrdiff_t(n); ++sk) {
    const std::size_t k = std::size_t(sk);
    if (z[k] == 0.0) {
      slope[k] = 0.0;
      curv[k] = 0.0;
      continue;
    }
    const double w = omega[k] + alpha * z[k];
    slope[k] = z[k] * voxel_grad(cache, k, w);
    curv[k] = z[k] * z[k] * voxel_curvature(cache, k, w);
  }
  LineTerms t;
  t.slope = reduce_sum(n, [&](std::size_t k) { return slope[k]; });
  t.curvature = reduce_sum(n, [&](std::size_t k) { return curv[k]; });
  return t;
}

MlImages ml_images(const PairTermCache& cache, std::span<const double> omega) {
  check(cache, omega);
  const auto& b = cache.basis;
  const int K = b.components, L = cache.echoes;
  const std::size_t nv = cache.mask.dims().voxels();
  MlImages out;
  out.components = K;
  out.x.assign(std::size_t(K) * nv, 0.0);
  out.flagged.assign(nv, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sk = 0; sk < std::ptrdiff_t(cache.size()); ++sk) {
    const std::size_t k = std::size_t(sk);
    const std::size_t j = cache.mask.voxel(k);
    bool any = false;
    for (std::size_t i = k * L * cache.coils; i < (k + 1) * L * cache.coils; ++i) any = any || cache.w_abs[i] != 0.0;
    if (!any) {
      out.flagged[j] = 1;
      continue;
    }
    for (int q = 0; q < K; ++q) {
      cdouble s = 0.0;
      for (int l = 0; l < L; ++l)
        s += b.pinv[std::size_t(q) * L + l] * std::polar(1.0, -omega[k] * cache.echo_times[l]) * cache.z[k * L + l];
      out.x[std::size_t(q) * nv + j] = s / cache.ssq[k];
    }
  }
  return out;
}

namespace reference {

namespace {

// Visits every ordered (c, d, m, n) term of voxel k.
template <class F>
void each_term(const PairTermCache& c, std::size_t k, F&& f) {
  const std::size_t L = std::size_t(c.echoes), Nc = std::size_t(c.coils);
  for (std::size_t m = 0; m < L; ++m)
    for (std::size_t n = 0; n < L; ++n) {
      const double dt = c.echo_times[m] - c.echo_times[n];
      const cdouble g = c.basis.Gamma(int(m), int(n)) / c.ssq[k];
      for (std::size_t cc = 0; cc < Nc; ++cc)
        for (std::size_t d = 0; d < Nc; ++d) {
          const cdouble r = g * std::conj(c.w[(k * L + m) * Nc + cc]) * c.w[(k * L + n) * Nc + d];
          f(r, dt);
        }
    }
}

}  // namespace

double cost_phi(const PairTermCache& cache, std::span<const double> omega) {
  check(cache, omega);
  return reduce_sum_serial(cache.size(), [&](std::size_t k) {
    double s = 0.0;
    each_term(cache, k, [&](cdouble r, double dt) { s += std::abs(r) * (1.0 - std::cos(std::arg(r) + omega[k] * dt)); });
    return s;
  });
}

std::vector<double> grad_phi(const PairTermCache& cache, std::span<const double> omega) {
  check(cache, omega);
  std::vector<double> g(cache.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k)
    each_term(cache, k, [&](cdouble r, double dt) { g[k] += std::abs(r) * dt * std::sin(std::arg(r) + omega[k] * dt); });
  return g;
}

std::vector<double> curvatures(const PairTermCache& cache, std::span<const double> omega) {
  check(cache, omega);
  std::vector<double> d(cache.size(), 0.0);
  for (std::size_t k = 0; k < d.size(); ++k)
    each_term(cache, k, [&](cdouble r, double dt) {
      if (dt != 0.0) d[k] += std::abs(r) * dt * dt * wrapped_sinc(std::arg(r) + omega[k] * dt);
    });
  return d;
}

}  // namespace reference

}  // namespace fieldkit
