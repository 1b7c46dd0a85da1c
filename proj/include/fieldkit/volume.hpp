#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fieldkit {

using cdouble = std::complex<double>;

// Volume geometry. Voxels are linearized x-fastest: j = x + nx*(y + ny*z).
struct Dims {
  int nx = 1;
  int ny = 1;
  int nz = 1;

  std::size_t voxels() const { return std::size_t(nx) * ny * nz; }
  std::size_t index(int x, int y, int z) const {
    return std::size_t(x) + std::size_t(nx) * (std::size_t(y) + std::size_t(ny) * z);
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

// Boolean support region. Quantities defined on the mask are stored
// compactly, in increasing voxel order ("masked order").
class Mask {
 public:
  Mask() = default;
  Mask(Dims dims, std::vector<std::uint8_t> inside);
  static Mask full(Dims dims);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return voxels_.size(); }
  bool empty() const { return voxels_.empty(); }

  bool contains(std::size_t j) const { return slot_[j] >= 0; }
  // Position of voxel j in masked order, or -1.
  std::int64_t slot(std::size_t j) const { return slot_[j]; }
  std::size_t voxel(std::size_t k) const { return voxels_[k]; }
  std::span<const std::size_t> voxels() const { return voxels_; }
  const std::vector<std::uint8_t>& inside() const { return inside_; }

  template <class T>
  std::vector<T> scatter(std::span<const T> compact, T fill = T{}) const {
    std::vector<T> out(dims_.voxels(), fill);
    for (std::size_t k = 0; k < voxels_.size(); ++k) out[voxels_[k]] = compact[k];
    return out;
  }
  template <class T>
  std::vector<T> gather(std::span<const T> full) const {
    std::vector<T> out(voxels_.size());
    for (std::size_t k = 0; k < voxels_.size(); ++k) out[k] = full[voxels_[k]];
    return out;
  }

  friend bool operator==(const Mask& a, const Mask& b) {
    return a.dims_ == b.dims_ && a.inside_ == b.inside_;
  }

 private:
  Dims dims_;
  std::vector<std::uint8_t> inside_;
  std::vector<std::size_t> voxels_;
  std::vector<std::int64_t> slot_;
};

}  // namespace fieldkit
