#include "fieldkit/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "fieldkit/parallel.hpp"

namespace fieldkit {

DifferenceOperator::DifferenceOperator(const Mask& mask, int order, std::array<bool, 3> axes)
    : order_(order), cols_(mask.size()) {
  if (order != 1 && order != 2) throw std::invalid_argument("difference order must be 1 or 2");
  const Dims d = mask.dims();
  const int extent[3] = {d.nx, d.ny, d.nz};
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const std::size_t j = mask.voxel(k);
    const int pos[3] = {int(j % d.nx), int((j / d.nx) % d.ny), int(j / (std::size_t(d.nx) * d.ny))};
    const std::size_t stride[3] = {1, std::size_t(d.nx), std::size_t(d.nx) * d.ny};
    for (int a = 0; a < 3; ++a) {
      if (!axes[a]) continue;
      if (order == 1) {
        if (pos[a] + 1 >= extent[a]) continue;
        const std::int64_t kn = mask.slot(j + stride[a]);
        if (kn < 0) continue;
        col_.insert(col_.end(), {k, std::size_t(kn)});
        val_.insert(val_.end(), {-1.0, 1.0});
      } else {
        if (pos[a] - 1 < 0 || pos[a] + 1 >= extent[a]) continue;
        const std::int64_t kp = mask.slot(j - stride[a]);
        const std::int64_t kn = mask.slot(j + stride[a]);
        if (kp < 0 || kn < 0) continue;
        col_.insert(col_.end(), {std::size_t(kp), k, std::size_t(kn)});
        val_.insert(val_.end(), {1.0, -2.0, 1.0});
      }
      row_ptr_.push_back(col_.size());
      row_axis_.push_back(std::uint8_t(a));
    }
  }
  build_transpose();
}

void DifferenceOperator::build_transpose() {
  t_ptr_.assign(cols_ + 1, 0);
  for (std::size_t c : col_) ++t_ptr_[c + 1];
  for (std::size_t j = 0; j < cols_; ++j) t_ptr_[j + 1] += t_ptr_[j];
  t_row_.resize(col_.size());
  t_val_.resize(col_.size());
  std::vector<std::size_t> next(t_ptr_.begin(), t_ptr_.end() - 1);
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const std::size_t q = next[col_[p]]++;
      t_row_[q] = r;
      t_val_[q] = val_[p];
    }
}

void DifferenceOperator::set_weights(std::span<const double> weights) {
  if (weights.size() != rows()) throw std::invalid_argument("one weight per difference row is required");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("difference weights must be finite and >= 0");
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) val_[p] *= weights[r];
  build_transpose();
}

std::vector<double> DifferenceOperator::apply(std::span<const double> x) const {
  if (x.size() != cols_) throw std::invalid_argument("vector length does not match the mask");
  std::vector<double> out(rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < std::ptrdiff_t(rows()); ++r) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += val_[p] * x[col_[p]];
    out[r] = s;
  }
  return out;
}

std::vector<double> DifferenceOperator::apply_adjoint(std::span<const double> v) const {
  if (v.size() != rows()) throw std::invalid_argument("vector length does not match the row count");
  std::vector<double> out(cols_);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < std::ptrdiff_t(cols_); ++j) {
    double s = 0.0;
    for (std::size_t p = t_ptr_[j]; p < t_ptr_[j + 1]; ++p) s += t_val_[p] * v[t_row_[p]];
    out[j] = s;
  }
  return out;
}

std::vector<double> DifferenceOperator::normal(std::span<const double> x) const { return apply_adjoint(apply(x)); }

double DifferenceOperator::norm_sq(std::span<const double> x) const {
  const auto cx = apply(x);
  return reduce_sum(cx.size(), [&](std::size_t r) { return cx[r] * cx[r]; });
}

SparseSPD DifferenceOperator::assemble_normal(double beta) const {
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
  std::vector<std::size_t> colptr{0}, rowind;
  std::vector<double> values;
  std::vector<std::pair<std::size_t, double>> entries;
  for (std::size_t j = 0; j < cols_; ++j) {
    entries.clear();
    entries.emplace_back(j, 0.0);
    for (std::size_t q = t_ptr_[j]; q < t_ptr_[j + 1]; ++q) {
      const std::size_t r = t_row_[q];
      const double arj = t_val_[q];
      for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
        if (col_[p] >= j) entries.emplace_back(col_[p], beta * val_[p] * arj);
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (e > 0 && entries[e].first == rowind.back()) {
        values.back() += entries[e].second;
      } else {
        rowind.push_back(entries[e].first);
        values.push_back(entries[e].second);
      }
    }
    colptr.push_back(rowind.size());
  }
  return SparseSPD(cols_, std::move(colptr), std::move(rowind), std::move(values));
}

std::vector<double> DifferenceOperator::diag_majorizer(double beta) const {
  const SparseSPD A = assemble_normal(beta);
  std::vector<double> m(cols_, 0.0);
  const auto cp = A.colptr();
  const auto ri = A.rowind();
  const auto v = A.values();
  for (std::size_t j = 0; j < cols_; ++j) {
    m[j] += std::abs(v[cp[j]]);
    for (std::size_t p = cp[j] + 1; p < cp[j + 1]; ++p) {
      m[j] += std::abs(v[p]);
      m[ri[p]] += std::abs(v[p]);
    }
  }
  return m;
}

}  // namespace fieldkit
