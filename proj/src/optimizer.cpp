#include "fieldkit/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fieldkit/errors.hpp"
#include "fieldkit/metrics.hpp"
#include "fieldkit/parallel.hpp"

namespace fieldkit {

std::string_view to_string(Preconditioner p) {
  switch (p) {
    case Preconditioner::none: return "none";
    case Preconditioner::diagonal: return "diag";
    case Preconditioner::ic0: return "ic0";
    case Preconditioner::ict: return "ict";
  }
  return "unknown";
}

Preconditioner parse_preconditioner(std::string_view name) {
  if (name == "none") return Preconditioner::none;
  if (name == "diag" || name == "diagonal") return Preconditioner::diagonal;
  if (name == "ic0") return Preconditioner::ic0;
  if (name == "ict" || name == "ic") return Preconditioner::ict;
  throw std::invalid_argument("unknown preconditioner '" + std::string(name) + "' (none, diag, ic0, ict)");
}

void SolverConfig::validate() const {
  if (outer < 1) throw std::invalid_argument("outer iteration count must be >= 1");
  if (inner < 1) throw std::invalid_argument("inner line-search iteration count must be >= 1");
  if (!(ict_scale > 0.0) || !std::isfinite(ict_scale)) throw std::invalid_argument("ict scale must be > 0");
  if (!(grad_tol >= 0.0)) throw std::invalid_argument("gradient tolerance must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double norm2(std::span<const double> v) {
  return std::sqrt(reduce_sum(v.size(), [&](std::size_t k) { return v[k] * v[k]; }));
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what);
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericalError(std::string("non-finite ") + what);
}

void annotate(IterationRecord& row, std::span<const double> omega, const Monitor& monitor) {
  if (!monitor.truth.empty()) row.rmse_hz = rms_difference_hz(omega, monitor.truth);
  if (!monitor.reference.empty()) row.rmsd_hz = rms_difference_hz(omega, monitor.reference);
}

bool reached(const IterationLog& log, const Monitor& monitor) {
  const auto& row = log.rows.back();
  return monitor.stop_below_rmsd_hz && row.rmsd_hz && *row.rmsd_hz < *monitor.stop_below_rmsd_hz;
}

void check_problem(const Problem& problem, std::span<const double> omega0) {
  if (omega0.size() != problem.cache.size() || problem.reg.cols() != problem.cache.size())
    throw std::invalid_argument("initial field map, cache and regularizer sizes differ");
  if (!(problem.beta >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
  for (double w : omega0)
    if (!std::isfinite(w)) throw std::invalid_argument("initial field map must be finite");
}

}  // namespace

LineSearchResult line_search(const Problem& problem, std::span<const double> omega, std::span<const double> z,
                             int inner) {
  if (inner < 1) throw std::invalid_argument("inner iteration count must be >= 1");
  const auto cz = problem.reg.apply(z);
  const auto cw = problem.reg.apply(omega);
  const double czz = reduce_sum(cz.size(), [&](std::size_t r) { return cz[r] * cz[r]; });
  const double czw = reduce_sum(cz.size(), [&](std::size_t r) { return cz[r] * cw[r]; });
  const double beta = problem.beta;

  LineSearchResult res;
  res.alphas.push_back(0.0);
  double alpha = 0.0;
  for (int k = 0; k < inner; ++k) {
    const LineTerms t = line_terms(problem.cache, omega, z, alpha);
    const double slope = t.slope + beta * (czw + alpha * czz);
    const double denom = t.curvature + beta * czz;
    require_finite(slope, "line-search derivative");
    if (!(denom > 0.0)) {
      res.flat = true;
      break;
    }
    const double next = alpha - slope / denom;
    if (next == alpha) break;
    alpha = next;
    res.alphas.push_back(alpha);
  }
  res.alpha = alpha;
  return res;
}

DiagonalPreconditioner::DiagonalPreconditioner(std::span<const double> d, const SparseSPD& reg)
    : diag_(reg.diagonal()) {
  if (d.size() != diag_.size()) throw std::invalid_argument("curvatures do not match the regularizer order");
  for (std::size_t j = 0; j < diag_.size(); ++j) {
    diag_[j] += d[j];
    if (!(diag_[j] > 0.0)) diag_[j] = 1.0;
  }
}

std::vector<double> DiagonalPreconditioner::apply(std::span<const double> g) const {
  std::vector<double> p(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) p[j] = g[j] / diag_[j];
  return p;
}

SolveResult ncg_mls(const Problem& problem, std::vector<double> omega0, const SolverConfig& cfg,
                    const Monitor& monitor) {
  cfg.validate();
  check_problem(problem, omega0);
  const std::size_t n = omega0.size();
  const auto t0 = Clock::now();
  double excluded = 0.0;

  SolveResult out;
  out.omega = std::move(omega0);
  auto& w = out.omega;

  const SparseSPD reg = problem.reg.assemble_normal(problem.beta);
  std::vector<double> g = grad_psi(problem.cache, problem.reg, problem.beta, w);
  double cost = cost_psi(problem.cache, problem.reg, problem.beta, w).psi;
  require_finite(cost, "cost");
  require_finite(g, "gradient");

  auto record = [&](IterationRecord row) {
    const auto m0 = Clock::now();
    annotate(row, w, monitor);
    excluded += seconds_since(m0);
    out.log.rows.push_back(row);
  };
  record({.iter = 0, .time_s = 0.0, .cost = cost, .grad_norm = norm2(g)});

  std::vector<double> g_prev, p_prev, z(n, 0.0);
  for (int it = 0; it < cfg.outer; ++it) {
    if (cfg.grad_tol > 0.0 && norm_inf(g) < cfg.grad_tol) break;
    if (reached(out.log, monitor)) break;

    IterationRecord row;
    std::vector<double> p;
    if (cfg.preconditioner == Preconditioner::none) {
      p = g;
    } else {
      const auto d = curvatures(problem.cache, w);
      bool use_diag = cfg.preconditioner == Preconditioner::diagonal;
      if (!use_diag) {
        try {
          const SparseSPD H = assemble_hessian(d, reg);
          const TriangularFactor L = cfg.preconditioner == Preconditioner::ic0
                                         ? ichol_zero_fill(H)
                                         : ichol_threshold(H, cfg.ict_scale * H.max_abs());
          row.factor_nnz = L.nnz();
          p = solve_factor(L, g);
        } catch (const NumericalError&) {
          use_diag = true;
          row.fallback = true;
        }
      }
      if (use_diag) p = DiagonalPreconditioner(d, reg).apply(g);
    }
    for (double& v : p) v = -v;

    double mu = 0.0;
    if (!g_prev.empty()) {
      const double den = dot(p_prev, g_prev);
      double num = 0.0;
      num = reduce_sum(n, [&](std::size_t k) { return p[k] * (g[k] - g_prev[k]); });
      mu = den != 0.0 ? std::max(0.0, num / den) : 0.0;
    }
    for (std::size_t k = 0; k < n; ++k) z[k] = p[k] + mu * z[k];
    if (!(dot(z, g) < 0.0)) z = p;  // restart along the preconditioned steepest descent
    if (!(dot(z, g) < 0.0)) {
      z = g;
      for (double& v : z) v = -v;
    }

    const LineSearchResult ls = line_search(problem, w, z, cfg.inner);
    std::vector<double> trial(w);
    for (std::size_t k = 0; k < n; ++k) trial[k] += ls.alpha * z[k];
    auto g_trial = grad_psi(problem.cache, problem.reg, problem.beta, trial);
    const double c_trial = cost_psi(problem.cache, problem.reg, problem.beta, trial).psi;
    require_finite(c_trial, "cost");
    require_finite(g_trial, "gradient");

    row.iter = it + 1;
    if (c_trial <= cost) {
      w = std::move(trial);
      g_prev = std::move(g);
      p_prev = std::move(p);
      g = std::move(g_trial);
      cost = c_trial;
      row.step = ls.alpha;
    } else {
      // Rounding-level increase: keep the iterate and restart the conjugate direction.
      std::fill(z.begin(), z.end(), 0.0);
      g_prev.clear();
    }
    row.time_s = seconds_since(t0) - excluded;
    row.cost = cost;
    row.grad_norm = norm2(g);
    record(row);
  }
  return out;
}

SolveResult qm_baseline(const Problem& problem, std::vector<double> omega0, const SolverConfig& cfg,
                        const Monitor& monitor) {
  cfg.validate();
  check_problem(problem, omega0);
  const std::size_t n = omega0.size();
  const auto t0 = Clock::now();
  double excluded = 0.0;

  SolveResult out;
  out.omega = std::move(omega0);
  auto& w = out.omega;

  std::vector<double> curv = problem.reg.diag_majorizer(problem.beta);
  for (std::size_t k = 0; k < n; ++k) curv[k] += problem.cache.dmax[k];

  std::vector<double> g = grad_psi(problem.cache, problem.reg, problem.beta, w);
  double cost = cost_psi(problem.cache, problem.reg, problem.beta, w).psi;
  require_finite(cost, "cost");

  auto record = [&](IterationRecord row) {
    const auto m0 = Clock::now();
    annotate(row, w, monitor);
    excluded += seconds_since(m0);
    out.log.rows.push_back(row);
  };
  record({.iter = 0, .time_s = 0.0, .cost = cost, .grad_norm = norm2(g)});

  for (int it = 0; it < cfg.outer; ++it) {
    if (cfg.grad_tol > 0.0 && norm_inf(g) < cfg.grad_tol) break;
    if (reached(out.log, monitor)) break;
    std::vector<double> trial(w);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < std::ptrdiff_t(n); ++k)
      if (curv[k] > 0.0) trial[k] -= g[k] / curv[k];
    auto g_trial = grad_psi(problem.cache, problem.reg, problem.beta, trial);
    const double c_trial = cost_psi(problem.cache, problem.reg, problem.beta, trial).psi;
    require_finite(c_trial, "cost");
    require_finite(g_trial, "gradient");
    double step = 0.0;
    if (c_trial <= cost) {
      w = std::move(trial);
      g = std::move(g_trial);
      cost = c_trial;
      step = 1.0;
    }
    record({.iter = it + 1, .time_s = seconds_since(t0) - excluded, .cost = cost, .grad_norm = norm2(g), .step = step});
  }
  return out;
}

std::optional<Crossing> first_below(const IterationLog& log, double rmsd_threshold_hz) {
  for (const auto& row : log.rows)
    if (row.rmsd_hz && *row.rmsd_hz < rmsd_threshold_hz) return Crossing{row.time_s, row.iter};
  return std::nullopt;
}

}  // namespace fieldkit
