#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldkit/io.hpp"
#include "fieldkit/optimizer.hpp"
#include "fieldkit/signal_model.hpp"

namespace fieldkit {

// Resolved settings for every CLI command; echoed into output manifests.
struct RunConfig {
  // shared
  std::string mode = "auto";  // auto (from input), fieldmap, waterfat
  std::string beta_text = "2^-4";
  double beta = 0.0625;
  int reg_order = 1;
  std::string method = "ncg";  // qm or ncg
  Preconditioner preconditioner = Preconditioner::ict;
  double ict_scale = 1e-3;
  int outer = 30;
  int inner = 10;
  double grad_tol = 0.0;
  int sweep = 100;
  int pwls_cg = 10;
  std::uint64_t seed = 0;
  int threads = 0;
  double mask_threshold = 0.1;
  int mask_dilation = 2;

  // simulate; zero / empty picks the mode default (64x64x40, 4 coils,
  // 0/2/10 ms for field maps; 96x72x1, 1 coil, 8 echoes for water-fat)
  Dims dims{0, 0, 0};
  int coils = 0;
  double snr_db = 20.0;
  std::vector<double> echo_times_s;
  double field_tesla = 3.0;
  double scale = 0.0;  // phantom magnitude scale; 0 picks the mode default

  // bench
  int reference_outer = 200;
  double rmsd_threshold_hz = 0.5;

  std::string input;
  std::string output;
  std::string log_path;

  void validate_estimate() const;
  void validate_simulate() const;
  void validate_bench() const;
  nlohmann::json to_json() const;
  SolverConfig solver() const;
};

// Protocol defaults for water-fat simulation: 8 echoes from 1.5 ms, 2.3 ms apart.
std::vector<double> waterfat_echo_times();
double default_phantom_scale(Mode mode);

VolumeContainer run_simulate(const RunConfig& cfg);

struct EstimateResult {
  Mode mode = Mode::fieldmap;
  Mask mask;
  std::vector<double> omega0;  // masked order, rad/s
  std::vector<double> omega;
  IterationLog log;
  std::vector<cdouble> water;
  std::vector<cdouble> fat;
  VolumeContainer output;
};

EstimateResult run_estimate(const RunConfig& cfg, const VolumeContainer& input);

struct BenchRow {
  std::string method;
  int iterations = 0;
  std::optional<double> time_to_threshold_s;
  std::optional<int> iters_to_threshold;
  double final_cost = 0.0;
  double final_rmsd_hz = 0.0;
  std::optional<double> final_rmse_hz;
  std::optional<double> speedup_of_ncg_ic;  // this method's time / ncg-ic time
  IterationLog log;
};

// First row is the long ncg-ic reference run; then qm, ncg, ncg-d, ncg-ic.
std::vector<BenchRow> run_bench(const RunConfig& cfg, const VolumeContainer& input);
void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows);

}  // namespace fieldkit
