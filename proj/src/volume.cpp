#include "fieldkit/volume.hpp"

#include <stdexcept>

namespace fieldkit {

Mask::Mask(Dims dims, std::vector<std::uint8_t> inside)
    : dims_(dims), inside_(std::move(inside)), slot_(dims.voxels(), -1) {
  if (inside_.size() != dims_.voxels())
    throw std::invalid_argument("mask size does not match volume dimensions");
  for (std::size_t j = 0; j < inside_.size(); ++j) {
    if (inside_[j]) {
      inside_[j] = 1;
      slot_[j] = std::int64_t(voxels_.size());
      voxels_.push_back(j);
    }
  }
}

Mask Mask::full(Dims dims) { return Mask(dims, std::vector<std::uint8_t>(dims.voxels(), 1)); }

}  // namespace fieldkit
