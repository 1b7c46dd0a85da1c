#include "fieldkit/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fieldkit/parallel.hpp"

namespace fieldkit {

double rms_difference_hz(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("vectors differ in length");
  if (a.empty()) return 0.0;
  const double ss = reduce_sum(a.size(), [&](std::size_t k) {
    const double e = a[k] - b[k];
    return e * e;
  });
  return std::sqrt(ss / double(a.size())) / (2.0 * std::numbers::pi);
}

double nrmse(std::span<const cdouble> estimate, std::span<const cdouble> truth, const Mask& mask) {
  if (estimate.size() != truth.size() || truth.size() != mask.dims().voxels())
    throw std::invalid_argument("images and mask differ in size");
  const auto vox = mask.voxels();
  const double err = reduce_sum(vox.size(), [&](std::size_t k) { return std::norm(estimate[vox[k]] - truth[vox[k]]); });
  const double ref = reduce_sum(vox.size(), [&](std::size_t k) { return std::norm(truth[vox[k]]); });
  if (!(ref > 0.0)) throw std::invalid_argument("reference image is zero on the mask");
  return std::sqrt(err / ref);
}

ErrorMetrics metrics(std::span<const double> omega, std::span<const double> truth,
                     std::span<const double> reference, const Mask& mask) {
  const auto w = mask.gather(omega);
  ErrorMetrics m;
  m.rmse_hz = rms_difference_hz(w, mask.gather(truth));
  m.rmsd_hz = rms_difference_hz(w, mask.gather(reference));
  return m;
}

}  // namespace fieldkit
