#pragma once

#include <array>
#include <span>
#include <vector>

#include "fieldkit/sparse.hpp"
#include "fieldkit/volume.hpp"

namespace fieldkit {

// Masked finite-difference operator C acting on masked-order vectors.
// Order 1 rows are [-1, +1] pairs along an axis, order 2 rows are [1, -2, 1]
// triples; a row exists only when every voxel it touches is in the mask.
class DifferenceOperator {
 public:
  DifferenceOperator() = default;
  DifferenceOperator(const Mask& mask, int order, std::array<bool, 3> axes = {true, true, true});

  int order() const { return order_; }
  std::size_t rows() const { return row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  // Axis (0, 1, 2) of each row.
  std::span<const std::uint8_t> row_axis() const { return row_axis_; }

  // Per-difference nonnegative weights; each row is scaled by its weight.
  void set_weights(std::span<const double> weights);

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_adjoint(std::span<const double> v) const;
  // C^T C x
  std::vector<double> normal(std::span<const double> x) const;
  double norm_sq(std::span<const double> x) const;

  // beta C^T C as a lower-triangle sparse matrix; every column carries a diagonal entry.
  SparseSPD assemble_normal(double beta) const;
  // Row sums beta sum_k |C^T C|_{jk}, so that diag(m) dominates beta C^T C.
  std::vector<double> diag_majorizer(double beta) const;

 private:
  void build_transpose();

  int order_ = 1;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_;
  std::vector<double> val_;
  std::vector<std::uint8_t> row_axis_;
  // Transposed copy for gather-style adjoint products.
  std::vector<std::size_t> t_ptr_;
  std::vector<std::size_t> t_row_;
  std::vector<double> t_val_;
};

}  // namespace fieldkit
