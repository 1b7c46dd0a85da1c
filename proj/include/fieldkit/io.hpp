#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldkit/optimizer.hpp"
#include "fieldkit/volume.hpp"

namespace fieldkit {

enum class DType { c64, f32, u8 };

std::string_view to_string(DType t);
DType parse_dtype(std::string_view name);
std::size_t dtype_size(DType t);

// One raw payload: `frames` consecutive volumes, x-fastest, little-endian.
struct ArrayData {
  DType dtype = DType::f32;
  std::size_t frames = 1;
  std::vector<std::complex<float>> c64;
  std::vector<float> f32;
  std::vector<std::uint8_t> u8;

  std::size_t elements() const;
};

// JSON manifest plus raw payload files in one directory:
//   manifest.json = {shape, n_coils, n_echoes, echo_times_s,
//                    arrays: {name: {path, dtype, frames}}, attributes}
struct VolumeContainer {
  Dims dims;
  int n_coils = 1;
  int n_echoes = 0;
  std::vector<double> echo_times_s;
  nlohmann::json attributes = nlohmann::json::object();
  std::map<std::string, ArrayData> arrays;

  bool has(const std::string& name) const { return arrays.count(name) != 0; }

  void put_complex(const std::string& name, std::span<const cdouble> v);
  void put_real(const std::string& name, std::span<const double> v);
  void put_bytes(const std::string& name, std::span<const std::uint8_t> v);

  std::vector<cdouble> get_complex(const std::string& name) const;
  std::vector<double> get_real(const std::string& name) const;
  std::vector<std::uint8_t> get_bytes(const std::string& name) const;

 private:
  const ArrayData& require(const std::string& name, DType dtype) const;
  std::size_t frames_for(std::size_t n) const;
};

void write_container(const std::filesystem::path& dir, const VolumeContainer& vc);
VolumeContainer read_container(const std::filesystem::path& dir);

// Accepts "2^-4", "2^(-4)" or any decimal / scientific literal.
double parse_beta(const std::string& text);

// Numeric fields use 17 significant digits; absent optional values are empty.
void write_log_csv(const std::filesystem::path& path, const IterationLog& log);
std::string format_number(double v);

}  // namespace fieldkit
