#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace fieldkit {

// Symmetric matrix stored as its lower triangle in compressed-column form.
// Row indices are sorted within each column and the diagonal entry is the
// first entry of every column.
class SparseSPD {
 public:
  SparseSPD() = default;
  SparseSPD(std::size_t n, std::vector<std::size_t> colptr, std::vector<std::size_t> rowind,
            std::vector<double> values);

  std::size_t order() const { return n_; }
  std::size_t nnz_lower() const { return values_.size(); }
  // Entries of the full symmetric matrix.
  std::size_t nnz() const { return 2 * values_.size() - n_; }

  std::span<const std::size_t> colptr() const { return colptr_; }
  std::span<const std::size_t> rowind() const { return rowind_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double diag(std::size_t j) const { return values_[colptr_[j]]; }
  std::vector<double> diagonal() const;
  double max_abs() const;
  // A(i, j) for any i, j (binary search).
  double at(std::size_t i, std::size_t j) const;

  // y = A x using both triangles.
  std::vector<double> multiply(std::span<const double> x) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> colptr_;
  std::vector<std::size_t> rowind_;
  std::vector<double> values_;
};

// H = diag(d) + reg, where reg is an assembled beta C^T C.
// Decoupled voxels (no data and no regularizer rows) get a unit diagonal.
SparseSPD assemble_hessian(std::span<const double> d, const SparseSPD& reg);

enum class FactorKind { zero_fill, threshold, complete };

std::string_view to_string(FactorKind kind);

// Lower-triangular factor L with P = L L^T.
class TriangularFactor {
 public:
  TriangularFactor() = default;
  TriangularFactor(std::size_t n, std::vector<std::size_t> colptr, std::vector<std::size_t> rowind,
                   std::vector<double> values, FactorKind kind, double tau, double shift);

  std::size_t order() const { return n_; }
  std::size_t nnz() const { return values_.size(); }
  FactorKind kind() const { return kind_; }
  double tolerance() const { return tau_; }
  // Relative diagonal shift sigma used after a breakdown (0 when none was needed).
  double shift() const { return shift_; }

  std::span<const std::size_t> colptr() const { return colptr_; }
  std::span<const std::size_t> rowind() const { return rowind_; }
  std::span<const double> values() const { return values_; }

  // x = L^{-1} b, in place.
  void forward(std::span<double> b) const;
  // x = L^{-T} b, in place.
  void backward(std::span<double> b) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> colptr_;
  std::vector<std::size_t> rowind_;
  std::vector<double> values_;
  FactorKind kind_ = FactorKind::zero_fill;
  double tau_ = 0.0;
  double shift_ = 0.0;
};

// IC(0): pattern of L restricted to the lower pattern of H.
TriangularFactor ichol_zero_fill(const SparseSPD& H);

// Threshold incomplete Cholesky: off-diagonal factor entries with magnitude
// below tau are dropped during elimination. tau = 0 gives the complete factor.
TriangularFactor ichol_threshold(const SparseSPD& H, double tau);

// (L L^T)^{-1} g by forward then backward substitution.
std::vector<double> solve_factor(const TriangularFactor& L, std::span<const double> g);

// ||I - L^{-1} H L^{-T}||_F / sqrt(n). Dense O(n^2) memory; diagnostic for small problems.
double inverse_residual_nrmse(const SparseSPD& H, const TriangularFactor& L);

}  // namespace fieldkit
