#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fieldkit/signal_model.hpp"

namespace fieldkit {

struct ComponentImages {
  std::vector<cdouble> water;         // full volume, zero outside the mask
  std::vector<cdouble> fat;
  std::vector<std::uint8_t> flagged;  // rank-deficient voxel systems
};

// Per-voxel least-squares fit of the (N_c L) x 2 system
// (gamma diag(exp(i omega_j t))) kron s_j for the given field map
// (masked order, rad/s).
ComponentImages separate(const MultiEchoImages& y, const SensitivityMaps& s, const SignalBasis& basis,
                         const EchoTimes& t, const Mask& mask, std::span<const double> omega);

}  // namespace fieldkit
