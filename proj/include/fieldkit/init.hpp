#pragma once

#include <span>
#include <vector>

#include "fieldkit/regularizer.hpp"
#include "fieldkit/signal_model.hpp"

namespace fieldkit {

// Phase of the coil-combined first two echoes divided by t_2 - t_1, in masked order.
std::vector<double> init_two_echo(const MultiEchoImages& y, const SensitivityMaps& s, const EchoTimes& t,
                                  const Mask& mask);

struct SweepConfig {
  int grid = 100;
  int pwls_iterations = 10;
};

// Grid of candidate off-resonances (rad/s): `grid` points spanning
// [-|df|/2, +|df|/2] inclusive, df the amplitude-weighted mean fat shift.
std::vector<double> sweep_grid(const SignalBasis& basis, int grid);

// Per-voxel argmin of the voxel's data cost over the sweep grid; ties go to
// the smallest |omega|.
std::vector<double> init_sweep(const PairTermCache& cache, const SweepConfig& cfg);

// Conjugate-gradient iterations on the penalized weighted least-squares problem
//   min_w sum_j rho_j (w_j - w~_j)^2 + beta/2 ||C w||^2,
// i.e. (2 diag(rho) + beta C^T C) w = 2 rho .* w~, starting from w~.
// `residual_norms`, when given, receives ||b - A w|| for every iterate.
std::vector<double> init_pwls(std::span<const double> omega_tilde, std::span<const double> rho,
                              const DifferenceOperator& C, double beta, int iterations,
                              std::vector<double>* residual_norms = nullptr);

}  // namespace fieldkit
