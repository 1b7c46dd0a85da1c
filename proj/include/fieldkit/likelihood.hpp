#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fieldkit/regularizer.hpp"
#include "fieldkit/signal_model.hpp"

namespace fieldkit {

// All field-map vectors here are in masked order, rad/s.

// Eliminated-image negative log-likelihood, including the omega-independent
// m = n constants:
//   Phi = sum_j [ c0_j + sum_{m<n} 2 (K0 - Re(R exp(i omega_j (t_m - t_n)))) ].
double cost_phi(const PairTermCache& cache, std::span<const double> omega);
std::vector<double> grad_phi(const PairTermCache& cache, std::span<const double> omega);

struct CostReport {
  double phi = 0.0;
  double reg = 0.0;  // ||C omega||^2
  double psi = 0.0;  // phi + beta/2 reg
};

CostReport cost_psi(const PairTermCache& cache, const DifferenceOperator& C, double beta,
                    std::span<const double> omega);
std::vector<double> grad_psi(const PairTermCache& cache, const DifferenceOperator& C, double beta,
                             std::span<const double> omega);

// Huber optimal curvatures d_j of the data term at omega (>= 0).
std::vector<double> curvatures(const PairTermCache& cache, std::span<const double> omega);

// Sums along the line omega + alpha z used by the majorizer line search:
// slope = z . grad Phi, curvature = sum_j z_j^2 d_j, both at omega + alpha z.
struct LineTerms {
  double slope = 0.0;
  double curvature = 0.0;
};
LineTerms line_terms(const PairTermCache& cache, std::span<const double> omega, std::span<const double> z,
                     double alpha);

// sin(u)/u with u wrapped into (-pi, pi].
double wrapped_sinc(double u);
double wrap_phase(double u);

// Closed-form image estimate for a given field map: full-volume component
// images (K back to back) and a flag for masked voxels without signal.
struct MlImages {
  int components = 1;
  std::vector<cdouble> x;
  std::vector<std::uint8_t> flagged;
};
MlImages ml_images(const PairTermCache& cache, std::span<const double> omega);

namespace reference {

// Serial direct evaluation over every (c, d, m, n) term from w. Used as the
// test oracle and benchmark baseline for the collapsed parallel kernels.
double cost_phi(const PairTermCache& cache, std::span<const double> omega);
std::vector<double> grad_phi(const PairTermCache& cache, std::span<const double> omega);
std::vector<double> curvatures(const PairTermCache& cache, std::span<const double> omega);

}  // namespace reference

}  // namespace fieldkit
