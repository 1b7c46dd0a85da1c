#include "fieldkit/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "fieldkit/errors.hpp"

namespace fieldkit {

SparseSPD::SparseSPD(std::size_t n, std::vector<std::size_t> colptr, std::vector<std::size_t> rowind,
                     std::vector<double> values)
    : n_(n), colptr_(std::move(colptr)), rowind_(std::move(rowind)), values_(std::move(values)) {
  if (colptr_.size() != n_ + 1 || rowind_.size() != values_.size() || colptr_.back() != values_.size())
    throw std::invalid_argument("inconsistent compressed-column arrays");
  for (std::size_t j = 0; j < n_; ++j) {
    if (colptr_[j] >= colptr_[j + 1] || rowind_[colptr_[j]] != j)
      throw std::invalid_argument("every column must start with its diagonal entry");
    for (std::size_t p = colptr_[j] + 1; p < colptr_[j + 1]; ++p)
      if (rowind_[p] <= rowind_[p - 1] || rowind_[p] >= n_)
        throw std::invalid_argument("row indices must be sorted, unique and in range");
  }
}

std::vector<double> SparseSPD::diagonal() const {
  std::vector<double> d(n_);
  for (std::size_t j = 0; j < n_; ++j) d[j] = values_[colptr_[j]];
  return d;
}

double SparseSPD::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseSPD::at(std::size_t i, std::size_t j) const {
  if (i < j) std::swap(i, j);
  const auto first = rowind_.begin() + colptr_[j], last = rowind_.begin() + colptr_[j + 1];
  const auto it = std::lower_bound(first, last, i);
  return (it != last && *it == i) ? values_[it - rowind_.begin()] : 0.0;
}

std::vector<double> SparseSPD::multiply(std::span<const double> x) const {
  std::vector<double> y(n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    const std::size_t p0 = colptr_[j];
    y[j] += values_[p0] * x[j];
    for (std::size_t p = p0 + 1; p < colptr_[j + 1]; ++p) {
      const std::size_t i = rowind_[p];
      y[i] += values_[p] * x[j];
      y[j] += values_[p] * x[i];
    }
  }
  return y;
}

SparseSPD assemble_hessian(std::span<const double> d, const SparseSPD& reg) {
  const std::size_t n = reg.order();
  if (d.size() != n) throw std::invalid_argument("curvature vector does not match the regularizer order");
  std::vector<double> values(reg.values().begin(), reg.values().end());
  const auto colptr = reg.colptr();
  bool any = false;
  for (std::size_t j = 0; j < n; ++j) {
    if (!(d[j] >= 0.0)) throw std::invalid_argument("curvatures must be nonnegative");
    values[colptr[j]] += d[j];
    if (values[colptr[j]] > 0.0) any = true;
  }
  if (!any) throw NumericalError("Hessian is identically zero");
  for (std::size_t j = 0; j < n; ++j)
    if (values[colptr[j]] <= 0.0) values[colptr[j]] = 1.0;  // PSD: zero diagonal means zero row
  return SparseSPD(n, {reg.colptr().begin(), reg.colptr().end()}, {reg.rowind().begin(), reg.rowind().end()},
                   std::move(values));
}

std::string_view to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::zero_fill: return "ic0";
    case FactorKind::threshold: return "ict";
    case FactorKind::complete: return "complete";
  }
  return "unknown";
}

TriangularFactor::TriangularFactor(std::size_t n, std::vector<std::size_t> colptr, std::vector<std::size_t> rowind,
                                   std::vector<double> values, FactorKind kind, double tau, double shift)
    : n_(n),
      colptr_(std::move(colptr)),
      rowind_(std::move(rowind)),
      values_(std::move(values)),
      kind_(kind),
      tau_(tau),
      shift_(shift) {
  if (colptr_.size() != n_ + 1 || rowind_.size() != values_.size())
    throw std::invalid_argument("inconsistent factor arrays");
  for (std::size_t j = 0; j < n_; ++j)
    if (colptr_[j] >= colptr_[j + 1] || rowind_[colptr_[j]] != j || !(values_[colptr_[j]] > 0.0))
      throw NumericalError("factor has a missing or nonpositive diagonal");
}

void TriangularFactor::forward(std::span<double> b) const {
  for (std::size_t j = 0; j < n_; ++j) {
    const std::size_t p0 = colptr_[j];
    const double xj = b[j] / values_[p0];
    b[j] = xj;
    for (std::size_t p = p0 + 1; p < colptr_[j + 1]; ++p) b[rowind_[p]] -= values_[p] * xj;
  }
}

void TriangularFactor::backward(std::span<double> b) const {
  for (std::size_t j = n_; j-- > 0;) {
    const std::size_t p0 = colptr_[j];
    double s = b[j];
    for (std::size_t p = p0 + 1; p < colptr_[j + 1]; ++p) s -= values_[p] * b[rowind_[p]];
    b[j] = s / values_[p0];
  }
}

namespace {

// Left-looking column Cholesky. With `restrict_pattern` the factor keeps the
// pattern of lower(H); otherwise fill is admitted and entries below `tau`
// are dropped. Returns nullopt on a nonpositive pivot.
std::optional<TriangularFactor> factor(const SparseSPD& H, double shift, bool restrict_pattern, double tau) {
  const std::size_t n = H.order();
  const auto hp = H.colptr();
  const auto hi = H.rowind();
  const auto hv = H.values();

  std::vector<std::size_t> lp{0}, li;
  std::vector<double> lv;
  lp.reserve(n + 1);
  li.reserve(H.nnz_lower());
  lv.reserve(H.nnz_lower());

  std::vector<double> work(n, 0.0);
  std::vector<char> marked(n, 0);
  std::vector<std::size_t> pattern;
  // Columns j < k with a pending entry in row i are chained from head[i].
  std::vector<std::ptrdiff_t> head(n, -1), link(n, -1);
  std::vector<std::size_t> cursor(n, 0);

  for (std::size_t k = 0; k < n; ++k) {
    pattern.clear();
    for (std::size_t p = hp[k]; p < hp[k + 1]; ++p) {
      const std::size_t i = hi[p];
      work[i] = hv[p] + (i == k ? shift * hv[p] : 0.0);
      marked[i] = 1;
      pattern.push_back(i);
    }

    for (std::ptrdiff_t j = head[k]; j != -1;) {
      const std::ptrdiff_t next = link[j];
      const std::size_t p = cursor[j];
      const std::size_t end = lp[j + 1];
      const double lkj = lv[p];
      for (std::size_t q = p; q < end; ++q) {
        const std::size_t i = li[q];
        if (marked[i]) {
          work[i] -= lv[q] * lkj;
        } else if (!restrict_pattern) {
          marked[i] = 1;
          work[i] = -lv[q] * lkj;
          pattern.push_back(i);
        }
      }
      cursor[j] = p + 1;
      if (p + 1 < end) {
        const std::size_t r = li[p + 1];
        link[j] = head[r];
        head[r] = j;
      }
      j = next;
    }

    const double pivot = work[k];
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return std::nullopt;
    const double lkk = std::sqrt(pivot);
    std::sort(pattern.begin(), pattern.end());
    li.push_back(k);
    lv.push_back(lkk);
    for (std::size_t i : pattern) {
      if (i != k) {
        const double v = work[i] / lkk;
        if (restrict_pattern || !(std::abs(v) < tau)) {
          li.push_back(i);
          lv.push_back(v);
        }
      }
      work[i] = 0.0;
      marked[i] = 0;
    }
    lp.push_back(li.size());
    if (lp[k + 1] > lp[k] + 1) {
      cursor[k] = lp[k] + 1;
      const std::size_t r = li[cursor[k]];
      link[k] = head[r];
      head[r] = std::ptrdiff_t(k);
    }
  }

  const FactorKind kind =
      restrict_pattern ? FactorKind::zero_fill : (tau > 0.0 ? FactorKind::threshold : FactorKind::complete);
  return TriangularFactor(n, std::move(lp), std::move(li), std::move(lv), kind, tau, shift);
}

constexpr double kShifts[] = {0.0, 1e-3, 1e-2, 1e-1};

TriangularFactor factor_with_shifts(const SparseSPD& H, bool restrict_pattern, double tau) {
  for (double sigma : kShifts)
    if (auto f = factor(H, sigma, restrict_pattern, tau)) return std::move(*f);
  throw NumericalError("incomplete Cholesky breakdown persisted after diagonal shifts");
}

}  // namespace

TriangularFactor ichol_zero_fill(const SparseSPD& H) { return factor_with_shifts(H, true, 0.0); }

TriangularFactor ichol_threshold(const SparseSPD& H, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("drop tolerance must be nonnegative");
  return factor_with_shifts(H, false, tau);
}

std::vector<double> solve_factor(const TriangularFactor& L, std::span<const double> g) {
  if (g.size() != L.order()) throw std::invalid_argument("right-hand side does not match factor order");
  std::vector<double> x(g.begin(), g.end());
  L.forward(x);
  L.backward(x);
  return x;
}

double inverse_residual_nrmse(const SparseSPD& H, const TriangularFactor& L) {
  const std::size_t n = H.order();
  if (L.order() != n) throw std::invalid_argument("factor order does not match matrix");
  // Y = L^{-1} H, stored by columns.
  std::vector<double> Y(n * n, 0.0);
#pragma omp parallel
  {
    std::vector<double> e(n, 0.0);
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t sk = 0; sk < std::ptrdiff_t(n); ++sk) {
      const std::size_t k = std::size_t(sk);
      e[k] = 1.0;
      std::vector<double> col = H.multiply(e);
      e[k] = 0.0;
      L.forward(col);
      std::copy(col.begin(), col.end(), Y.begin() + k * n);
    }
  }
  // M = L^{-1} Y^T; column k of Y^T is row k of Y.
  double total = 0.0;
#pragma omp parallel
  {
    std::vector<double> col(n);
    double local = 0.0;
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t sk = 0; sk < std::ptrdiff_t(n); ++sk) {
      const std::size_t k = std::size_t(sk);
      for (std::size_t j = 0; j < n; ++j) col[j] = Y[j * n + k];
      L.forward(col);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = (i == k ? 1.0 : 0.0) - col[i];
        local += r * r;
      }
    }
#pragma omp atomic
    total += local;
  }
  return std::sqrt(total) / std::sqrt(double(n));
}

}  // namespace fieldkit
