#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fieldkit/likelihood.hpp"
#include "fieldkit/regularizer.hpp"
#include "fieldkit/signal_model.hpp"
#include "fieldkit/sparse.hpp"

namespace testing {

using fieldkit::cdouble;

struct Instance {
  fieldkit::Dims dims;
  fieldkit::Mode mode = fieldkit::Mode::fieldmap;
  fieldkit::EchoTimes t{{0.0, 0.001}};
  fieldkit::SignalBasis basis;
  fieldkit::SensitivityMaps s;
  fieldkit::MultiEchoImages y;
  fieldkit::Mask mask;
  std::vector<double> omega_true;  // full volume, rad/s
};

inline cdouble crandn(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double re = n(rng);
  return {re, n(rng)};
}

inline std::vector<double> echo_times(std::mt19937_64& rng, int L) {
  std::uniform_real_distribution<double> u(0.0008, 0.004);
  std::vector<double> t{std::uniform_real_distribution<double>(0.0, 0.002)(rng)};
  for (int l = 1; l < L; ++l) t.push_back(t.back() + u(rng));
  return t;
}

// Random data-consistent images plus complex noise on a random masked volume.
inline Instance random_instance(std::uint64_t seed, fieldkit::Mode mode, int L, int coils, fieldkit::Dims dims,
                                double noise = 0.3, double mask_fraction = 0.8) {
  std::mt19937_64 rng(seed);
  Instance in;
  in.dims = dims;
  in.mode = mode;
  in.t = fieldkit::EchoTimes(echo_times(rng, L));
  std::optional<fieldkit::FatModel> fat;
  if (mode == fieldkit::Mode::waterfat) fat = fieldkit::FatModel::six_peak(3.0);
  in.basis = fieldkit::build_gamma(mode, in.t, fat);
  const std::size_t nv = dims.voxels();
  std::vector<cdouble> sd(std::size_t(coils) * nv);
  for (auto& v : sd) v = crandn(rng);
  in.s = fieldkit::SensitivityMaps(dims, coils, sd);
  const int K = in.basis.components;
  std::vector<cdouble> x(std::size_t(K) * nv);
  for (auto& v : x) v = 3.0 * crandn(rng);
  std::uniform_real_distribution<double> field(-300.0, 300.0);
  in.omega_true.resize(nv);
  for (auto& w : in.omega_true) w = field(rng);
  in.y = fieldkit::forward_model(x, in.omega_true, in.s, in.t, in.basis);
  for (auto& v : in.y.data()) v += noise * crandn(rng);
  std::bernoulli_distribution keep(mask_fraction);
  std::vector<std::uint8_t> inside(nv);
  for (auto& b : inside) b = keep(rng) ? 1 : 0;
  inside[0] = 1;
  in.mask = fieldkit::Mask(dims, inside);
  return in;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

inline Eigen::MatrixXd dense(const fieldkit::SparseSPD& A) {
  const std::size_t n = A.order();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = A.colptr()[j]; p < A.colptr()[j + 1]; ++p) {
      M(A.rowind()[p], j) = A.values()[p];
      M(j, A.rowind()[p]) = A.values()[p];
    }
  return M;
}

inline Eigen::MatrixXd dense(const fieldkit::TriangularFactor& L) {
  const std::size_t n = L.order();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = L.colptr()[j]; p < L.colptr()[j + 1]; ++p) M(L.rowind()[p], j) = L.values()[p];
  return M;
}

inline Eigen::MatrixXd dense(const fieldkit::DifferenceOperator& C) {
  Eigen::MatrixXd M(C.rows(), C.cols());
  std::vector<double> e(C.cols(), 0.0);
  for (std::size_t j = 0; j < C.cols(); ++j) {
    e[j] = 1.0;
    const auto col = C.apply(e);
    for (std::size_t i = 0; i < C.rows(); ++i) M(i, j) = col[i];
    e[j] = 0.0;
  }
  return M;
}

// Unprojected least-squares cost min_x sum_{c,l} |y - e^{i w t_l} s_c gamma_l x|^2 for one voxel.
inline double voxel_lsq_residual(const Instance& in, std::size_t j, double w) {
  const int L = in.basis.echoes, K = in.basis.components, Nc = in.s.coils();
  Eigen::MatrixXcd A(L * Nc, K);
  Eigen::VectorXcd b(L * Nc);
  for (int l = 0; l < L; ++l)
    for (int c = 0; c < Nc; ++c) {
      const cdouble ph = std::polar(1.0, w * in.t[l]);
      for (int k = 0; k < K; ++k) A(l * Nc + c, k) = ph * in.s(c, j) * in.basis.g(l, k);
      b(l * Nc + c) = in.y(c, l, j);
    }
  const Eigen::VectorXcd x = A.colPivHouseholderQr().solve(b);
  return (A * x - b).squaredNorm();
}

}  // namespace testing

namespace testing {

// H = diag(d) + beta C^T C on a full nx x ny x nz grid, d ~ U(0, 0.1).
inline fieldkit::SparseSPD toy_hessian(fieldkit::Dims dims, std::uint64_t seed, double beta = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  const fieldkit::DifferenceOperator C(fieldkit::Mask::full(dims), 1);
  std::vector<double> d(dims.voxels());
  for (auto& v : d) v = u(rng);
  return fieldkit::assemble_hessian(d, C.assemble_normal(beta));
}

}  // namespace testing
