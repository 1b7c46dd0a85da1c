#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fieldkit/volume.hpp"

namespace fieldkit {

// Echo-time shifts in seconds; at least two, strictly increasing.
class EchoTimes {
 public:
  struct Pair {
    int m;
    int n;
    double dt;  // t_m - t_n, m < n
  };

  explicit EchoTimes(std::vector<double> t);

  std::size_t size() const { return t_.size(); }
  double operator[](std::size_t l) const { return t_[l]; }
  std::span<const double> values() const { return t_; }
  const std::vector<Pair>& pairs() const { return pairs_; }

 private:
  std::vector<double> t_;
  std::vector<Pair> pairs_;
};

struct FatPeak {
  double amplitude;  // relative, unitless
  double shift_hz;
};

// Multipeak fat spectrum. Amplitudes are normalized to sum to one.
class FatModel {
 public:
  explicit FatModel(std::vector<FatPeak> peaks);

  static FatModel single_peak(double shift_hz);
  // Six-peak liver fat spectrum (ppm relative to water) at field strength B0 in tesla.
  static FatModel six_peak(double field_tesla);

  const std::vector<FatPeak>& peaks() const { return peaks_; }
  // Amplitude-weighted mean shift in Hz.
  double mean_shift_hz() const;
  // sum_p alpha_p exp(i 2 pi df_p t)
  cdouble signature(double t) const;

 private:
  std::vector<FatPeak> peaks_;
};

enum class Mode { fieldmap, waterfat };

// gamma (L x K) and the projector Gamma = gamma (gamma^* gamma)^{-1} gamma^*.
struct SignalBasis {
  Mode mode = Mode::fieldmap;
  int echoes = 0;
  int components = 1;
  std::vector<cdouble> gamma;      // row-major L x K
  std::vector<cdouble> projector;  // row-major L x L
  std::vector<cdouble> pinv;       // row-major K x L, (gamma^* gamma)^{-1} gamma^*
  std::optional<FatModel> fat;

  cdouble g(int l, int k) const { return gamma[std::size_t(l) * components + k]; }
  cdouble Gamma(int m, int n) const { return projector[std::size_t(m) * echoes + n]; }
};

SignalBasis build_gamma(Mode mode, const EchoTimes& t, const std::optional<FatModel>& fat = std::nullopt);

// Complex image stack y(c, l, j), stored with j fastest.
class MultiEchoImages {
 public:
  MultiEchoImages() = default;
  MultiEchoImages(Dims dims, int coils, int echoes);
  MultiEchoImages(Dims dims, int coils, int echoes, std::vector<cdouble> data);

  const Dims& dims() const { return dims_; }
  int coils() const { return coils_; }
  int echoes() const { return echoes_; }
  std::size_t voxels() const { return dims_.voxels(); }

  cdouble& operator()(int c, int l, std::size_t j) { return data_[offset(c, l) + j]; }
  cdouble operator()(int c, int l, std::size_t j) const { return data_[offset(c, l) + j]; }
  std::span<cdouble> data() { return data_; }
  std::span<const cdouble> data() const { return data_; }

 private:
  std::size_t offset(int c, int l) const { return (std::size_t(c) * echoes_ + l) * dims_.voxels(); }

  Dims dims_;
  int coils_ = 0;
  int echoes_ = 0;
  std::vector<cdouble> data_;
};

// Coil sensitivities s(c, j) and the per-voxel sum of squares.
class SensitivityMaps {
 public:
  SensitivityMaps() = default;
  SensitivityMaps(Dims dims, int coils, std::vector<cdouble> data);
  static SensitivityMaps ones(Dims dims);

  const Dims& dims() const { return dims_; }
  int coils() const { return coils_; }
  cdouble operator()(int c, std::size_t j) const { return data_[std::size_t(c) * dims_.voxels() + j]; }
  std::span<const cdouble> data() const { return data_; }
  double ssq(std::size_t j) const { return ssq_[j]; }
  std::span<const double> ssq() const { return ssq_; }

 private:
  Dims dims_;
  int coils_ = 0;
  std::vector<cdouble> data_;
  std::vector<double> ssq_;
};

// Precomputed per-voxel quantities from which every r_{cdmnj} term,
//   r_{cdmnj} = (Gamma_mn / ssq_j) conj(w_{cmj}) w_{dnj},   w_{clj} = conj(s_cj) y_clj,
// follows in O(1). Arrays cover masked voxels only, in masked order.
struct PairTermCache {
  struct Pair {
    int m;
    int n;
    double dt;       // t_m - t_n
    cdouble gamma;   // Gamma_mn
  };

  Mask mask;
  SignalBasis basis;
  std::vector<double> echo_times;
  int coils = 0;
  int echoes = 0;
  std::vector<Pair> pairs;

  std::vector<cdouble> w;      // (k, l, c) -> (k*L + l)*Nc + c
  std::vector<double> w_abs;   // |w|
  std::vector<double> w_arg;   // arg w
  std::vector<cdouble> z;      // (k, l) -> k*L + l, sum_c w
  std::vector<double> ssq;     // k
  std::vector<cdouble> R;      // (k, p) -> k*P + p, sum_{c,d} r_{cd m n}
  std::vector<double> K0;      // (k, p), sum_{c,d} |r_{cd m n}|
  std::vector<double> c0;      // k, omega-independent m = n contribution
  std::vector<double> rho;     // k, sum over all (c,d,m,n) of |r|
  std::vector<double> dmax;    // k, sum over all terms of |r| dt^2

  std::size_t size() const { return ssq.size(); }
  std::size_t npairs() const { return pairs.size(); }

  // r_{cdmnj} for any echo pair (m, n) and full-volume voxel j; zero outside the mask.
  cdouble r(int c, int d, int m, int n, std::size_t j) const;
  // R and K0 by full-volume voxel index; zero outside the mask.
  cdouble pair_sum(std::size_t p, std::size_t j) const;
  double pair_abs_sum(std::size_t p, std::size_t j) const;
};

PairTermCache precompute_cache(const MultiEchoImages& y, const SensitivityMaps& s, const SignalBasis& basis,
                               const EchoTimes& t, const Mask& mask);

// y_{clj} = exp(i omega_j t_l) s_cj x_lj with x_lj = sum_k gamma_lk x_k(j).
// `components` holds K full volumes back to back (magnetization, or water then fat);
// `omega` is a full volume in rad/s.
MultiEchoImages forward_model(std::span<const cdouble> components, std::span<const double> omega,
                              const SensitivityMaps& s, const EchoTimes& t, const SignalBasis& basis);

}  // namespace fieldkit
