#include "fieldkit/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <stdexcept>

namespace fieldkit {

namespace fs = std::filesystem;

std::string_view to_string(DType t) {
  switch (t) {
    case DType::c64: return "c64";
    case DType::f32: return "f32";
    case DType::u8: return "u8";
  }
  return "?";
}

DType parse_dtype(std::string_view name) {
  if (name == "c64") return DType::c64;
  if (name == "f32") return DType::f32;
  if (name == "u8") return DType::u8;
  throw std::invalid_argument("unknown dtype '" + std::string(name) + "'");
}

std::size_t dtype_size(DType t) { return t == DType::c64 ? 8 : t == DType::f32 ? 4 : 1; }

std::size_t ArrayData::elements() const {
  switch (dtype) {
    case DType::c64: return c64.size();
    case DType::f32: return f32.size();
    case DType::u8: return u8.size();
  }
  return 0;
}

std::size_t VolumeContainer::frames_for(std::size_t n) const {
  const std::size_t nv = dims.voxels();
  if (nv == 0 || n % nv != 0) throw std::invalid_argument("array length is not a whole number of volumes");
  return n / nv;
}

void VolumeContainer::put_complex(const std::string& name, std::span<const cdouble> v) {
  ArrayData a;
  a.dtype = DType::c64;
  a.frames = frames_for(v.size());
  a.c64.reserve(v.size());
  for (const auto& x : v) a.c64.emplace_back(float(x.real()), float(x.imag()));
  arrays[name] = std::move(a);
}

void VolumeContainer::put_real(const std::string& name, std::span<const double> v) {
  ArrayData a;
  a.dtype = DType::f32;
  a.frames = frames_for(v.size());
  a.f32.assign(v.begin(), v.end());
  arrays[name] = std::move(a);
}

void VolumeContainer::put_bytes(const std::string& name, std::span<const std::uint8_t> v) {
  ArrayData a;
  a.dtype = DType::u8;
  a.frames = frames_for(v.size());
  a.u8.assign(v.begin(), v.end());
  arrays[name] = std::move(a);
}

const ArrayData& VolumeContainer::require(const std::string& name, DType dtype) const {
  const auto it = arrays.find(name);
  if (it == arrays.end()) throw std::invalid_argument("container has no array '" + name + "'");
  if (it->second.dtype != dtype)
    throw std::invalid_argument("array '" + name + "' has dtype " + std::string(to_string(it->second.dtype)) +
                                ", expected " + std::string(to_string(dtype)));
  return it->second;
}

std::vector<cdouble> VolumeContainer::get_complex(const std::string& name) const {
  const auto& a = require(name, DType::c64);
  std::vector<cdouble> v;
  v.reserve(a.c64.size());
  for (const auto& x : a.c64) v.emplace_back(x.real(), x.imag());
  return v;
}

std::vector<double> VolumeContainer::get_real(const std::string& name) const {
  const auto& a = require(name, DType::f32);
  return {a.f32.begin(), a.f32.end()};
}

std::vector<std::uint8_t> VolumeContainer::get_bytes(const std::string& name) const {
  return require(name, DType::u8).u8;
}

namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(char((v >> (8 * b)) & 0xFF));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= std::uint32_t(std::uint8_t(p[b])) << (8 * b);
  return v;
}

std::string extension(DType t) { return "." + std::string(to_string(t)); }

}  // namespace

void write_container(const fs::path& dir, const VolumeContainer& vc) {
  fs::create_directories(dir);
  nlohmann::json m;
  m["format"] = "fieldkit-volume";
  m["version"] = 1;
  m["shape"] = {vc.dims.nx, vc.dims.ny, vc.dims.nz};
  m["n_coils"] = vc.n_coils;
  m["n_echoes"] = vc.n_echoes;
  m["echo_times_s"] = vc.echo_times_s;
  m["arrays"] = nlohmann::json::object();
  for (const auto& [name, a] : vc.arrays) {
    const std::string file = name + extension(a.dtype);
    m["arrays"][name] = {{"path", file}, {"dtype", std::string(to_string(a.dtype))}, {"frames", a.frames}};
    std::vector<char> bytes;
    bytes.reserve(a.elements() * dtype_size(a.dtype));
    switch (a.dtype) {
      case DType::c64:
        for (const auto& x : a.c64) {
          put_u32(bytes, std::bit_cast<std::uint32_t>(x.real()));
          put_u32(bytes, std::bit_cast<std::uint32_t>(x.imag()));
        }
        break;
      case DType::f32:
        for (float x : a.f32) put_u32(bytes, std::bit_cast<std::uint32_t>(x));
        break;
      case DType::u8:
        for (auto x : a.u8) bytes.push_back(char(x));
        break;
    }
    std::ofstream f(dir / file, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir / file).string());
    f.write(bytes.data(), std::streamsize(bytes.size()));
  }
  m["attributes"] = vc.attributes;
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  f << m.dump(2) << "\n";
}

VolumeContainer read_container(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  std::ifstream f(mpath);
  if (!f) throw std::invalid_argument("cannot open manifest " + mpath.string());
  nlohmann::json m;
  try {
    f >> m;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed manifest " + mpath.string() + ": " + e.what());
  }
  VolumeContainer vc;
  try {
    const auto shape = m.at("shape").get<std::vector<int>>();
    if (shape.size() != 3 || shape[0] < 1 || shape[1] < 1 || shape[2] < 1)
      throw std::invalid_argument("manifest shape must be three positive integers [nx, ny, nz]");
    vc.dims = {shape[0], shape[1], shape[2]};
    vc.n_coils = m.value("n_coils", 1);
    vc.n_echoes = m.value("n_echoes", 0);
    vc.echo_times_s = m.value("echo_times_s", std::vector<double>{});
    vc.attributes = m.value("attributes", nlohmann::json::object());
    for (const auto& [name, entry] : m.at("arrays").items()) {
      ArrayData a;
      a.dtype = parse_dtype(entry.at("dtype").get<std::string>());
      a.frames = entry.at("frames").get<std::size_t>();
      const fs::path file = dir / entry.at("path").get<std::string>();
      const std::size_t count = a.frames * vc.dims.voxels();
      const std::size_t expect = count * dtype_size(a.dtype);
      std::ifstream in(file, std::ios::binary);
      if (!in) throw std::invalid_argument("missing payload " + file.string() + " for array '" + name + "'");
      std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (bytes.size() != expect)
        throw std::invalid_argument("payload " + file.string() + " has " + std::to_string(bytes.size()) +
                                    " bytes, manifest implies " + std::to_string(expect));
      switch (a.dtype) {
        case DType::c64:
          a.c64.resize(count);
          for (std::size_t i = 0; i < count; ++i)
            a.c64[i] = {std::bit_cast<float>(get_u32(&bytes[8 * i])), std::bit_cast<float>(get_u32(&bytes[8 * i + 4]))};
          break;
        case DType::f32:
          a.f32.resize(count);
          for (std::size_t i = 0; i < count; ++i) a.f32[i] = std::bit_cast<float>(get_u32(&bytes[4 * i]));
          break;
        case DType::u8:
          a.u8.assign(bytes.begin(), bytes.end());
          break;
      }
      vc.arrays[name] = std::move(a);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid manifest " + mpath.string() + ": " + e.what());
  }
  return vc;
}

double parse_beta(const std::string& text) {
  static const std::regex power(R"(^\s*2\s*\^\s*\(?\s*([+-]?\d+(\.\d+)?)\s*\)?\s*$)");
  std::smatch mt;
  double v;
  if (std::regex_match(text, mt, power)) {
    v = std::pow(2.0, std::stod(mt[1].str()));
  } else {
    std::size_t used = 0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse beta '" + text + "' (use e.g. 2^-4 or 0.0625)");
    }
    if (used != text.size()) throw std::invalid_argument("cannot parse beta '" + text + "'");
  }
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("beta must be finite and >= 0");
  return v;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_log_csv(const fs::path& path, const IterationLog& log) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "iter,time_s,cost,grad_norm,rmse_hz,rmsd_hz,factor_nnz\n";
  for (const auto& r : log.rows) {
    f << r.iter << ',' << format_number(r.time_s) << ',' << format_number(r.cost) << ','
      << format_number(r.grad_norm) << ',' << (r.rmse_hz ? format_number(*r.rmse_hz) : "") << ','
      << (r.rmsd_hz ? format_number(*r.rmsd_hz) : "") << ',' << r.factor_nnz << '\n';
  }
}

}  // namespace fieldkit
