#include <doctest.h>

#include "fieldkit/errors.hpp"
#include "fieldkit/sparse.hpp"
#include "support.hpp"

using namespace fieldkit;

TEST_CASE("compressed-column validation") {
  CHECK_NOTHROW(SparseSPD(2, {0, 2, 3}, {0, 1, 1}, {2.0, -1.0, 2.0}));
  CHECK_THROWS_AS(SparseSPD(2, {0, 2, 3}, {1, 0, 1}, {2.0, -1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(SparseSPD(2, {0, 1, 3}, {0, 0, 1}, {2.0, -1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(SparseSPD(2, {0, 2}, {0, 1}, {2.0, -1.0}), std::invalid_argument);
  const SparseSPD A(2, {0, 2, 3}, {0, 1, 1}, {2.0, -1.0, 3.0});
  CHECK(A.at(0, 1) == -1.0);
  CHECK(A.at(1, 0) == -1.0);
  CHECK(A.nnz() == 4);
  CHECK(A.max_abs() == 3.0);
  const auto y = A.multiply(std::vector<double>{1.0, 2.0});
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 5.0);
}

TEST_CASE("Hessian assembly adds curvature and patches decoupled voxels") {
  const DifferenceOperator C(Mask({3, 1, 1}, {1, 1, 1}), 1);
  const auto reg = C.assemble_normal(0.0);
  const auto H = assemble_hessian(std::vector<double>{0.5, 0.0, 2.0}, reg);
  CHECK(H.diag(0) == 0.5);
  CHECK(H.diag(1) == 1.0);
  CHECK(H.diag(2) == 2.0);
  CHECK_THROWS_AS(assemble_hessian(std::vector<double>{0.0, 0.0, 0.0}, reg), NumericalError);
  CHECK_THROWS_AS(assemble_hessian(std::vector<double>{1.0, -1.0, 0.0}, reg), std::invalid_argument);
}

TEST_CASE("zero-fill factor reproduces H on its own pattern") {
  const auto H = testing::toy_hessian({6, 5, 4}, 1);
  const auto L = ichol_zero_fill(H);
  CHECK(L.kind() == FactorKind::zero_fill);
  CHECK(L.nnz() == H.nnz_lower());
  const Eigen::MatrixXd Ld = testing::dense(L);
  const Eigen::MatrixXd LL = Ld * Ld.transpose();
  for (std::size_t j = 0; j < H.order(); ++j)
    for (std::size_t p = H.colptr()[j]; p < H.colptr()[j + 1]; ++p)
      CHECK(std::abs(LL(H.rowind()[p], j) - H.values()[p]) < 1e-12);
}

TEST_CASE("complete factor equals the dense Cholesky factor") {
  const auto H = testing::toy_hessian({5, 4, 3}, 2);
  const auto L = ichol_threshold(H, 0.0);
  CHECK(L.kind() == FactorKind::complete);
  const Eigen::MatrixXd ref = Eigen::LLT<Eigen::MatrixXd>(testing::dense(H)).matrixL();
  CHECK((testing::dense(L) - ref).norm() < 1e-10 * ref.norm());
  CHECK(inverse_residual_nrmse(H, L) < 1e-12);
}

TEST_CASE("threshold factor interpolates between zero fill and complete") {
  const auto H = testing::toy_hessian({8, 6, 5}, 3);
  const auto L0 = ichol_zero_fill(H);
  const auto Lt = ichol_threshold(H, 1e-3 * H.max_abs());
  const auto Lc = ichol_threshold(H, 0.0);
  CHECK(Lt.kind() == FactorKind::threshold);
  CHECK(Lt.tolerance() == doctest::Approx(1e-3 * H.max_abs()));
  CHECK(Lt.nnz() < Lc.nnz());
  const double e0 = inverse_residual_nrmse(H, L0), et = inverse_residual_nrmse(H, Lt),
               ec = inverse_residual_nrmse(H, Lc);
  CHECK(ec < et);
  CHECK(et < e0);
  for (std::size_t j = 0; j < Lt.order(); ++j)
    for (std::size_t p = Lt.colptr()[j] + 1; p < Lt.colptr()[j + 1]; ++p)
      CHECK(std::abs(Lt.values()[p]) >= Lt.tolerance());
}

TEST_CASE("factor solves agree with dense solves") {
  const auto H = testing::toy_hessian({5, 5, 3}, 4);
  std::mt19937_64 rng(6);
  const auto g = testing::random_vector(rng, H.order());
  for (const auto& L : {ichol_zero_fill(H), ichol_threshold(H, 0.0), ichol_threshold(H, 1e-3 * H.max_abs())}) {
    const auto x = solve_factor(L, g);
    const auto Ld = testing::dense(L);
    const Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    const Eigen::VectorXd ref = (Ld * Ld.transpose()).ldlt().solve(gv);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(x[i] == doctest::Approx(ref(i)).epsilon(1e-9));
  }
  const auto Lc = ichol_threshold(H, 0.0);
  const auto x = solve_factor(Lc, g);
  const auto Hx = H.multiply(x);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(Hx[i] == doctest::Approx(g[i]).epsilon(1e-9));
}

TEST_CASE("zero fill on a full pattern is the complete factor") {
  const SparseSPD A(3, {0, 3, 5, 6}, {0, 1, 2, 1, 2, 2}, {4.0, 1.0, 0.5, 3.0, -0.2, 2.0});
  const auto L0 = ichol_zero_fill(A);
  const Eigen::MatrixXd ref = Eigen::LLT<Eigen::MatrixXd>(testing::dense(A)).matrixL();
  CHECK((testing::dense(L0) - ref).norm() < 1e-14);
  CHECK(L0.shift() == 0.0);
}

TEST_CASE("factor size is nonincreasing in the drop tolerance") {
  const auto H = testing::toy_hessian({8, 6, 5}, 9);
  std::size_t prev = ichol_threshold(H, 0.0).nnz();
  for (const double scale : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const std::size_t cur = ichol_threshold(H, scale * H.max_abs()).nnz();
    CHECK(cur <= prev);
    CHECK(cur >= H.order());
    prev = cur;
  }
}

TEST_CASE("complete factor solves a random dense SPD system") {
  std::mt19937_64 rng(10);
  const std::size_t n = 50;
  Eigen::MatrixXd B(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) B(i, j) = std::normal_distribution<double>()(rng);
  const Eigen::MatrixXd A = B * B.transpose() + double(n) * Eigen::MatrixXd::Identity(n, n);
  std::vector<std::size_t> cp{0}, ri;
  std::vector<double> v;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j; i < n; ++i) {
      ri.push_back(i);
      v.push_back(A(i, j));
    }
    cp.push_back(ri.size());
  }
  const SparseSPD S(n, cp, ri, v);
  const auto g = testing::random_vector(rng, n);
  const auto x = solve_factor(ichol_threshold(S, 0.0), g);
  const Eigen::VectorXd ref = A.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(g.data(), n));
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(x[i] - ref(i)) < 1e-8);
}
