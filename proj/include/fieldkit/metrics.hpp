#pragma once

#include <span>

#include "fieldkit/volume.hpp"

namespace fieldkit {

// ||a - b||_2 / sqrt(n) over masked-order vectors in rad/s, reported in Hz.
// Serves as RMSE against the truth and RMSD against a converged reference.
double rms_difference_hz(std::span<const double> a, std::span<const double> b);

// ||estimate - truth|| / ||truth|| restricted to the mask.
double nrmse(std::span<const cdouble> estimate, std::span<const cdouble> truth, const Mask& mask);

struct ErrorMetrics {
  double rmse_hz = 0.0;
  double rmsd_hz = 0.0;
};

// Full-volume rad/s field maps compared on the mask.
ErrorMetrics metrics(std::span<const double> omega, std::span<const double> truth,
                     std::span<const double> reference, const Mask& mask);

}  // namespace fieldkit
