#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fieldkit/likelihood.hpp"
#include "fieldkit/regularizer.hpp"
#include "fieldkit/signal_model.hpp"
#include "fieldkit/sparse.hpp"

namespace fieldkit {

enum class Preconditioner { none, diagonal, ic0, ict };

std::string_view to_string(Preconditioner p);
Preconditioner parse_preconditioner(std::string_view name);

struct SolverConfig {
  Preconditioner preconditioner = Preconditioner::ict;
  double ict_scale = 1e-3;  // drop tolerance = ict_scale * max |H_ij|
  int outer = 50;
  int inner = 10;
  double grad_tol = 0.0;  // stop once ||g||_inf < grad_tol; 0 disables

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double time_s = 0.0;
  double cost = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  std::optional<double> rmse_hz{};
  std::optional<double> rmsd_hz{};
  std::size_t factor_nnz = 0;
  bool fallback = false;  // preconditioner broke down, diagonal used instead
};

// Row 0 is the initial point; Psi is nonincreasing down the rows.
struct IterationLog {
  std::vector<IterationRecord> rows;
};

struct Problem {
  const PairTermCache& cache;
  const DifferenceOperator& reg;
  double beta = 0.0;
};

// Optional references (masked order, rad/s) for the log's RMSE/RMSD columns.
// Their evaluation is excluded from the recorded wall time.
struct Monitor {
  std::span<const double> truth;
  std::span<const double> reference;
  // Stop once the RMSD to `reference` falls below this many Hz.
  std::optional<double> stop_below_rmsd_hz;
};

struct SolveResult {
  std::vector<double> omega;
  IterationLog log;
};

struct LineSearchResult {
  double alpha = 0.0;
  std::vector<double> alphas;  // alpha^(0) = 0, alpha^(1), ...
  bool flat = false;           // zero majorizer curvature along z
};

// Majorize-minimize step size along z from omega:
//   alpha <- alpha - f'(alpha) / (d(alpha) + beta ||Cz||^2).
LineSearchResult line_search(const Problem& problem, std::span<const double> omega, std::span<const double> z,
                             int inner);

// Element-wise inverse of diag(H) = d + diag(beta C^T C).
class DiagonalPreconditioner {
 public:
  DiagonalPreconditioner(std::span<const double> d, const SparseSPD& reg);
  std::vector<double> apply(std::span<const double> g) const;
  std::span<const double> diagonal() const { return diag_; }

 private:
  std::vector<double> diag_;
};

// Preconditioned nonlinear CG with Polak-Ribiere-plus and the majorizer line search.
SolveResult ncg_mls(const Problem& problem, std::vector<double> omega0, const SolverConfig& cfg,
                    const Monitor& monitor = {});

// Separable quadratic majorizer: omega <- omega - grad Psi / (dmax + m).
SolveResult qm_baseline(const Problem& problem, std::vector<double> omega0, const SolverConfig& cfg,
                        const Monitor& monitor = {});

// First wall time (and iteration) at which rmsd_hz drops below the threshold.
struct Crossing {
  double time_s = 0.0;
  int iter = 0;
};
std::optional<Crossing> first_below(const IterationLog& log, double rmsd_threshold_hz);

}  // namespace fieldkit
