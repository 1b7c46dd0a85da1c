#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fieldkit/metrics.hpp"
#include "fieldkit/signal_model.hpp"
#include "fieldkit/volume.hpp"

namespace fieldkit {

struct Phantom {
  Dims dims;
  std::vector<double> magnitude;  // >= 0
  std::vector<double> field_hz;   // smooth true field map
  // Water-fat phantoms only.
  std::vector<cdouble> water;
  std::vector<cdouble> fat;

  bool has_components() const { return !water.empty(); }
  std::vector<double> field_rad() const;
  // Component images as consumed by forward_model (K volumes back to back).
  std::vector<cdouble> components() const;
};

// Head-like nested ellipsoids with a smooth polynomial + Gaussian field map
// spanning roughly +-150 Hz. `scale` multiplies the magnitude.
Phantom make_brain_phantom(Dims dims, double scale = 1.0);

// 2D (nz = 1) torso-like slice with water, subcutaneous fat and a fatty
// organ; field map smooth within +-100 Hz.
Phantom make_waterfat_phantom(Dims dims, double scale = 1.0);

// Smooth complex receive profiles: Gaussian magnitude lobes centred on the
// volume faces around the x-y perimeter, with a linear phase. N_c = 1 gives ones.
SensitivityMaps sim_coil_maps(Dims dims, int coils);

// Adds white circular complex Gaussian noise with per-sample variance
// ||y||^2 / (N 10^(snr_db/10)). Non-finite snr_db returns y unchanged.
// Counter-based: output depends only on (y, snr_db, seed).
MultiEchoImages add_noise_snr(const MultiEchoImages& y, double snr_db, std::uint64_t seed);

// Coil-combined first-echo magnitude |sum_c conj(s_c) y_c1| thresholded at
// threshold_frac * max, per-slice 2D convex hull, then `dilation` rounds of
// 6-connected dilation. Voxels with zero coil sensitivity are excluded.
Mask make_mask(const MultiEchoImages& y, const SensitivityMaps& s, double threshold_frac = 0.1, int dilation = 2);

// Convex hull fill of a single 2D slice (nx x ny, x fastest).
std::vector<std::uint8_t> hull_fill_slice(const std::vector<std::uint8_t>& points, int nx, int ny);

}  // namespace fieldkit
