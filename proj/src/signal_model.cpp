#include "fieldkit/signal_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fieldkit/errors.hpp"

namespace fieldkit {

EchoTimes::EchoTimes(std::vector<double> t) : t_(std::move(t)) {
  if (t_.size() < 2) throw std::invalid_argument("at least two echo times are required");
  for (std::size_t l = 0; l < t_.size(); ++l) {
    if (!std::isfinite(t_[l])) throw std::invalid_argument("echo times must be finite");
    if (l > 0 && !(t_[l] > t_[l - 1])) throw std::invalid_argument("echo times must be strictly increasing");
  }
  for (int m = 0; m < int(t_.size()); ++m)
    for (int n = m + 1; n < int(t_.size()); ++n) pairs_.push_back({m, n, t_[m] - t_[n]});
}

FatModel::FatModel(std::vector<FatPeak> peaks) : peaks_(std::move(peaks)) {
  if (peaks_.empty()) throw std::invalid_argument("fat model needs at least one peak");
  double total = 0.0;
  for (const auto& p : peaks_) {
    if (!std::isfinite(p.amplitude) || !std::isfinite(p.shift_hz))
      throw std::invalid_argument("fat peaks must be finite");
    total += p.amplitude;
  }
  if (!(std::abs(total) > 0.0)) throw std::invalid_argument("fat peak amplitudes sum to zero");
  for (auto& p : peaks_) p.amplitude /= total;
}

FatModel FatModel::single_peak(double shift_hz) { return FatModel({{1.0, shift_hz}}); }

FatModel FatModel::six_peak(double field_tesla) {
  constexpr double kGyroMHzPerT = 42.577478;
  const double ppm[] = {-3.80, -3.40, -2.60, -1.94, -0.39, 0.60};
  const double amp[] = {0.087, 0.693, 0.128, 0.004, 0.039, 0.048};
  std::vector<FatPeak> peaks;
  for (int p = 0; p < 6; ++p) peaks.push_back({amp[p], ppm[p] * kGyroMHzPerT * field_tesla});
  return FatModel(std::move(peaks));
}

double FatModel::mean_shift_hz() const {
  double s = 0.0;
  for (const auto& p : peaks_) s += p.amplitude * p.shift_hz;
  return s;
}

cdouble FatModel::signature(double t) const {
  cdouble s = 0.0;
  for (const auto& p : peaks_) s += p.amplitude * std::polar(1.0, 2.0 * std::numbers::pi * p.shift_hz * t);
  return s;
}

SignalBasis build_gamma(Mode mode, const EchoTimes& t, const std::optional<FatModel>& fat) {
  SignalBasis b;
  b.mode = mode;
  b.echoes = int(t.size());
  const int L = b.echoes;
  if (mode == Mode::fieldmap) {
    if (fat) throw std::invalid_argument("field-map mode takes no fat model");
    b.components = 1;
    b.gamma.assign(L, 1.0);
  } else {
    if (!fat) throw std::invalid_argument("water-fat mode requires a fat model");
    b.components = 2;
    b.fat = fat;
    b.gamma.resize(std::size_t(L) * 2);
    for (int l = 0; l < L; ++l) {
      b.gamma[2 * l] = 1.0;
      b.gamma[2 * l + 1] = fat->signature(t[l]);
    }
  }

  const int K = b.components;
  // Gram matrix G = gamma^* gamma (K x K, Hermitian).
  std::vector<cdouble> G(K * K, 0.0);
  for (int a = 0; a < K; ++a)
    for (int c = 0; c < K; ++c)
      for (int l = 0; l < L; ++l) G[a * K + c] += std::conj(b.g(l, a)) * b.g(l, c);

  // X = G^{-1} gamma^* (K x L), via the 2x2 (or 1x1) Hermitian system.
  std::vector<cdouble> X(std::size_t(K) * L);
  if (K == 1) {
    const double g = G[0].real();
    for (int l = 0; l < L; ++l) X[l] = std::conj(b.g(l, 0)) / g;
  } else {
    const double a = G[0].real(), d = G[3].real();
    const cdouble off = G[1];
    const double mid = 0.5 * (a + d);
    const double rad = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(off));
    const double lmin = mid - rad, lmax = mid + rad;
    if (!(lmin > 1e-12 * lmax))
      throw NumericalError("degenerate signal basis: fat signature is (nearly) parallel to the water column");
    // Cholesky of G: G = U^* U, solve column by column.
    const double u11 = std::sqrt(a);
    const cdouble u12 = off / u11;
    const double u22 = std::sqrt(d - std::norm(u12));
    for (int l = 0; l < L; ++l) {
      const cdouble r0 = std::conj(b.g(l, 0)), r1 = std::conj(b.g(l, 1));
      // forward: U^* v = r
      const cdouble v0 = r0 / u11;
      const cdouble v1 = (r1 - std::conj(u12) * v0) / u22;
      // backward: U x = v
      const cdouble x1 = v1 / u22;
      const cdouble x0 = (v0 - u12 * x1) / u11;
      X[l] = x0;
      X[L + l] = x1;
    }
  }
  b.pinv = X;
  b.projector.assign(std::size_t(L) * L, 0.0);
  for (int m = 0; m < L; ++m)
    for (int n = 0; n < L; ++n) {
      cdouble s = 0.0;
      for (int k = 0; k < K; ++k) s += b.g(m, k) * X[std::size_t(k) * L + n];
      b.projector[std::size_t(m) * L + n] = s;
    }
  return b;
}

MultiEchoImages::MultiEchoImages(Dims dims, int coils, int echoes)
    : MultiEchoImages(dims, coils, echoes, std::vector<cdouble>(std::size_t(coils) * echoes * dims.voxels())) {}

MultiEchoImages::MultiEchoImages(Dims dims, int coils, int echoes, std::vector<cdouble> data)
    : dims_(dims), coils_(coils), echoes_(echoes), data_(std::move(data)) {
  if (coils < 1) throw std::invalid_argument("at least one coil is required");
  if (echoes < 2) throw std::invalid_argument("at least two echoes are required");
  if (data_.size() != std::size_t(coils) * echoes * dims.voxels())
    throw std::invalid_argument("image data size does not match coils x echoes x voxels");
  for (const auto& v : data_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("image data contains non-finite values");
}

SensitivityMaps::SensitivityMaps(Dims dims, int coils, std::vector<cdouble> data)
    : dims_(dims), coils_(coils), data_(std::move(data)), ssq_(dims.voxels(), 0.0) {
  if (coils < 1) throw std::invalid_argument("at least one coil is required");
  if (data_.size() != std::size_t(coils) * dims.voxels())
    throw std::invalid_argument("sensitivity data size does not match coils x voxels");
  const std::size_t nv = dims.voxels();
  for (int c = 0; c < coils; ++c)
    for (std::size_t j = 0; j < nv; ++j) ssq_[j] += std::norm(data_[c * nv + j]);
}

SensitivityMaps SensitivityMaps::ones(Dims dims) {
  return SensitivityMaps(dims, 1, std::vector<cdouble>(dims.voxels(), 1.0));
}

cdouble PairTermCache::r(int c, int d, int m, int n, std::size_t j) const {
  const std::int64_t k = mask.slot(j);
  if (k < 0) return 0.0;
  const std::size_t L = std::size_t(echoes), Nc = std::size_t(coils);
  const cdouble wc = w[(k * L + m) * Nc + c];
  const cdouble wd = w[(k * L + n) * Nc + d];
  return basis.Gamma(m, n) / ssq[k] * std::conj(wc) * wd;
}

cdouble PairTermCache::pair_sum(std::size_t p, std::size_t j) const {
  const std::int64_t k = mask.slot(j);
  return k < 0 ? cdouble(0.0) : R[k * pairs.size() + p];
}

double PairTermCache::pair_abs_sum(std::size_t p, std::size_t j) const {
  const std::int64_t k = mask.slot(j);
  return k < 0 ? 0.0 : K0[k * pairs.size() + p];
}

PairTermCache precompute_cache(const MultiEchoImages& y, const SensitivityMaps& s, const SignalBasis& basis,
                               const EchoTimes& t, const Mask& mask) {
  if (!(y.dims() == s.dims()) || !(y.dims() == mask.dims()))
    throw std::invalid_argument("images, sensitivities and mask have different dimensions");
  if (y.coils() != s.coils()) throw std::invalid_argument("images and sensitivities have different coil counts");
  if (std::size_t(y.echoes()) != t.size() || basis.echoes != y.echoes())
    throw std::invalid_argument("echo count mismatch between images, echo times and basis");
  if (mask.empty()) throw std::invalid_argument("mask is empty");
  for (std::size_t j : mask.voxels())
    if (!(s.ssq(j) > 0.0)) throw std::invalid_argument("mask contains voxels with zero coil sensitivity");

  PairTermCache cache;
  cache.mask = mask;
  cache.basis = basis;
  cache.echo_times.assign(t.values().begin(), t.values().end());
  cache.coils = y.coils();
  cache.echoes = y.echoes();
  for (const auto& p : t.pairs()) cache.pairs.push_back({p.m, p.n, p.dt, basis.Gamma(p.m, p.n)});

  const std::size_t Nm = mask.size(), L = std::size_t(y.echoes()), Nc = std::size_t(y.coils());
  const std::size_t P = cache.pairs.size();
  cache.w.resize(Nm * L * Nc);
  cache.w_abs.resize(Nm * L * Nc);
  cache.w_arg.resize(Nm * L * Nc);
  cache.z.resize(Nm * L);
  cache.ssq.resize(Nm);
  cache.R.resize(Nm * P);
  cache.K0.resize(Nm * P);
  cache.c0.resize(Nm);
  cache.rho.resize(Nm);
  cache.dmax.resize(Nm);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sk = 0; sk < std::ptrdiff_t(Nm); ++sk) {
    const std::size_t k = std::size_t(sk);
    const std::size_t j = mask.voxel(k);
    const double ssq = s.ssq(j);
    cache.ssq[k] = ssq;
    std::vector<double> abs_sum(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
      cdouble zl = 0.0;
      for (std::size_t c = 0; c < Nc; ++c) {
        const cdouble wv = std::conj(s(int(c), j)) * y(int(c), int(l), j);
        const std::size_t idx = (k * L + l) * Nc + c;
        cache.w[idx] = wv;
        cache.w_abs[idx] = std::abs(wv);
        cache.w_arg[idx] = std::arg(wv);
        zl += wv;
        abs_sum[l] += cache.w_abs[idx];
      }
      cache.z[k * L + l] = zl;
    }
    double c0 = 0.0, rho = 0.0, dmax = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const double g = basis.Gamma(int(l), int(l)).real();
      c0 += g / ssq * (abs_sum[l] * abs_sum[l] - std::norm(cache.z[k * L + l]));
      rho += std::abs(g) / ssq * abs_sum[l] * abs_sum[l];
    }
    for (std::size_t p = 0; p < P; ++p) {
      const auto& pr = cache.pairs[p];
      const cdouble zm = cache.z[k * L + pr.m], zn = cache.z[k * L + pr.n];
      cache.R[k * P + p] = pr.gamma / ssq * std::conj(zm) * zn;
      const double k0 = std::abs(pr.gamma) / ssq * abs_sum[pr.m] * abs_sum[pr.n];
      cache.K0[k * P + p] = k0;
      rho += 2.0 * k0;
      dmax += 2.0 * k0 * pr.dt * pr.dt;
    }
    cache.c0[k] = c0 < 0.0 ? 0.0 : c0;
    cache.rho[k] = rho;
    cache.dmax[k] = dmax;
  }
  return cache;
}

MultiEchoImages forward_model(std::span<const cdouble> components, std::span<const double> omega,
                              const SensitivityMaps& s, const EchoTimes& t, const SignalBasis& basis) {
  const Dims dims = s.dims();
  const std::size_t nv = dims.voxels();
  const int K = basis.components, L = int(t.size()), Nc = s.coils();
  if (components.size() != std::size_t(K) * nv) throw std::invalid_argument("component images have wrong size");
  if (omega.size() != nv) throw std::invalid_argument("field map has wrong size");
  if (basis.echoes != L) throw std::invalid_argument("basis echo count does not match echo times");

  MultiEchoImages y(dims, Nc, L);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sj = 0; sj < std::ptrdiff_t(nv); ++sj) {
    const std::size_t j = std::size_t(sj);
    for (int l = 0; l < L; ++l) {
      cdouble x = 0.0;
      for (int k = 0; k < K; ++k) x += basis.g(l, k) * components[std::size_t(k) * nv + j];
      const cdouble phase = std::polar(1.0, omega[j] * t[l]);
      for (int c = 0; c < Nc; ++c) y(c, l, j) = phase * s(c, j) * x;
    }
  }
  return y;
}

}  // namespace fieldkit
