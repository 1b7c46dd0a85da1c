#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fieldkit/io.hpp"
#include "support.hpp"

using namespace fieldkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fieldkit_test_" + name);
  fs::remove_all(p);
  return p;
}

VolumeContainer sample() {
  VolumeContainer vc;
  vc.dims = {3, 2, 2};
  vc.n_coils = 2;
  vc.n_echoes = 3;
  vc.echo_times_s = {0.0, 0.002, 0.01};
  std::vector<cdouble> y(2 * 3 * 12);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = {0.1 * double(i), -1.0 / (1.0 + double(i))};
  vc.put_complex("y", y);
  std::vector<double> f(12);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 / 3.0 * double(i) - 2.0;
  vc.put_real("fieldmap_hz", f);
  vc.put_bytes("mask", std::vector<std::uint8_t>{1, 0, 1, 1, 1, 1, 0, 0, 1, 1, 1, 1});
  vc.attributes["mode"] = "fieldmap";
  vc.attributes["config"] = {{"beta", "2^-4"}, {"outer", 30}};
  return vc;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("container round trip is bit-identical") {
  const auto dir = scratch("roundtrip");
  const auto vc = sample();
  write_container(dir, vc);
  const auto back = read_container(dir);
  CHECK(back.dims == vc.dims);
  CHECK(back.n_coils == 2);
  CHECK(back.n_echoes == 3);
  CHECK(back.echo_times_s == vc.echo_times_s);
  CHECK(back.attributes == vc.attributes);
  REQUIRE(back.arrays.size() == 3);
  CHECK(back.arrays.at("y").frames == 6);
  CHECK(back.arrays.at("y").c64 == vc.arrays.at("y").c64);
  CHECK(back.arrays.at("fieldmap_hz").f32 == vc.arrays.at("fieldmap_hz").f32);
  CHECK(back.arrays.at("mask").u8 == vc.arrays.at("mask").u8);
  const auto dir2 = scratch("roundtrip2");
  write_container(dir2, back);
  for (const auto& e : fs::directory_iterator(dir)) CHECK(slurp(e.path()) == slurp(dir2 / e.path().filename()));
}

TEST_CASE("accessors validate names, types and lengths") {
  auto vc = sample();
  CHECK_THROWS_AS(vc.get_real("y"), std::invalid_argument);
  CHECK_THROWS_AS(vc.get_complex("nope"), std::invalid_argument);
  CHECK_THROWS_AS(vc.put_real("bad", std::vector<double>(5)), std::invalid_argument);
  CHECK(vc.get_bytes("mask")[1] == 0);
  CHECK(vc.get_real("fieldmap_hz")[3] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("corrupt containers produce actionable errors") {
  const auto dir = scratch("corrupt");
  write_container(dir, sample());
  fs::resize_file(dir / "y.c64", 10);
  try {
    read_container(dir);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("y.c64") != std::string::npos);
  }
  fs::remove(dir / "y.c64");
  CHECK_THROWS_AS(read_container(dir), std::invalid_argument);
  CHECK_THROWS_AS(read_container(scratch("missing")), std::invalid_argument);
  const auto bad = scratch("badjson");
  fs::create_directories(bad);
  std::ofstream(bad / "manifest.json") << "{ not json";
  CHECK_THROWS_AS(read_container(bad), std::invalid_argument);
}

TEST_CASE("beta notation") {
  CHECK(parse_beta("2^-4") == 0.0625);
  CHECK(parse_beta("2^(-4)") == 0.0625);
  CHECK(parse_beta("2^3") == 8.0);
  CHECK(parse_beta("0.5") == 0.5);
  CHECK(parse_beta("1e-2") == 0.01);
  CHECK_THROWS_AS(parse_beta("two"), std::invalid_argument);
  CHECK_THROWS_AS(parse_beta("-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_beta("0.5x"), std::invalid_argument);
}

TEST_CASE("log CSV uses 17 significant digits and blank optional columns") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(3.0) == "3");
  IterationLog log;
  log.rows.push_back({.iter = 0, .time_s = 0.0, .cost = 2.0, .grad_norm = 1.0 / 3.0});
  IterationRecord r;
  r.iter = 1;
  r.cost = 1.5;
  r.rmse_hz = 0.25;
  r.factor_nnz = 12;
  log.rows.push_back(r);
  const auto p = scratch("log.csv");
  write_log_csv(p, log);
  std::ifstream f(p);
  std::string header, a, b;
  std::getline(f, header);
  std::getline(f, a);
  std::getline(f, b);
  CHECK(header == "iter,time_s,cost,grad_norm,rmse_hz,rmsd_hz,factor_nnz");
  CHECK(a == "0,0,2,0.33333333333333331,,,0");
  CHECK(b == "1,0,1.5,0,0.25,,12");
}
