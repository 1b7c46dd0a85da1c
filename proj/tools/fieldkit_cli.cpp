// fieldkit: field-map / water-fat estimation from multi-echo volumes.
//
//   fieldkit simulate --out DIR [--mode fieldmap|waterfat] [--size 64x64x40] [--coils 4] [--snr 20|inf]
//   fieldkit estimate --in DIR --out DIR [--beta 2^-4] [--precond ict] [--outer 30] ...
//   fieldkit bench    --in DIR --out FILE.csv [--outer 300] ...
//
// Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "fieldkit/errors.hpp"
#include "fieldkit/io.hpp"
#include "fieldkit/parallel.hpp"
#include "fieldkit/pipeline.hpp"

namespace {

using fieldkit::RunConfig;

fieldkit::Dims parse_size(const std::string& s) {
  static const std::regex re(R"(^(\d+)x(\d+)(x(\d+))?$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw std::invalid_argument("size must look like 64x64x40 or 96x72");
  return {std::stoi(m[1]), std::stoi(m[2]), m[4].matched ? std::stoi(m[4]) : 1};
}

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "none") return std::numeric_limits<double>::infinity();
  return std::stod(s);
}

struct Raw {
  std::string beta = "2^-4";
  std::string precond = "ict";
  std::string size;
  std::string snr = "20";
};

void add_solver_options(CLI::App* app, RunConfig& cfg, Raw& raw) {
  app->add_option("--mode", cfg.mode, "auto, fieldmap or waterfat");
  app->add_option("--beta", raw.beta, "regularization strength, e.g. 2^-4");
  app->add_option("--order", cfg.reg_order, "finite-difference order (1 or 2)");
  app->add_option("--method", cfg.method, "qm or ncg");
  app->add_option("--precond", raw.precond, "none, diag, ic0 or ict");
  app->add_option("--ict-scale", cfg.ict_scale, "ICT drop tolerance as a fraction of max|H|");
  app->add_option("--outer", cfg.outer, "outer iterations");
  app->add_option("--inner", cfg.inner, "line-search iterations");
  app->add_option("--grad-tol", cfg.grad_tol, "stop when ||grad||_inf falls below this (0 = off)");
  app->add_option("--sweep", cfg.sweep, "water-fat sweep grid size");
  app->add_option("--pwls-cg", cfg.pwls_cg, "CG iterations for the PWLS initialization");
  app->add_option("--field", cfg.field_tesla, "B0 in tesla for the default fat model");
  app->add_option("--mask-threshold", cfg.mask_threshold, "mask threshold as a fraction of the peak magnitude");
  app->add_option("--mask-dilation", cfg.mask_dilation, "mask dilation in voxels");
}

void resolve(RunConfig& cfg, const Raw& raw) {
  cfg.beta_text = raw.beta;
  cfg.beta = fieldkit::parse_beta(raw.beta);
  cfg.preconditioner = fieldkit::parse_preconditioner(raw.precond);
  if (!raw.size.empty()) cfg.dims = parse_size(raw.size);
  cfg.snr_db = parse_snr(raw.snr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized B0 field-map and water-fat estimation"};
  app.require_subcommand(1);
  RunConfig cfg;
  Raw raw;
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (FIELDKIT_THREADS overrides; 0 = all cores)");

  auto* sim = app.add_subcommand("simulate", "write a simulated phantom container");
  sim->add_option("--out", cfg.output, "output directory")->required();
  sim->add_option("--mode", cfg.mode, "fieldmap or waterfat");
  sim->add_option("--size", raw.size, "volume size NXxNYxNZ");
  sim->add_option("--coils", cfg.coils, "number of receive coils");
  sim->add_option("--snr", raw.snr, "SNR in dB, or inf for noiseless data");
  sim->add_option("--seed", cfg.seed, "noise seed");
  sim->add_option("--echo-times", cfg.echo_times_s, "echo times in seconds")->delimiter(',');
  sim->add_option("--field", cfg.field_tesla, "B0 in tesla for the fat model");
  sim->add_option("--scale", cfg.scale, "phantom magnitude scale (0 = default)");

  auto* est = app.add_subcommand("estimate", "estimate a field map (and water/fat images)");
  est->add_option("--in", cfg.input, "input container directory")->required();
  est->add_option("--out", cfg.output, "output directory")->required();
  est->add_option("--log", cfg.log_path, "iteration log CSV (default OUT/log.csv)");
  add_solver_options(est, cfg, raw);

  auto* bench = app.add_subcommand("bench", "compare qm, ncg, ncg-d and ncg-ic from one start");
  bench->add_option("--in", cfg.input, "input container directory")->required();
  bench->add_option("--out", cfg.output, "output CSV path");
  bench->add_option("--reference-outer", cfg.reference_outer, "iterations of the ncg-ic reference run");
  bench->add_option("--threshold", cfg.rmsd_threshold_hz, "RMSD threshold in Hz");
  add_solver_options(bench, cfg, raw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (bench->parsed() && bench->count("--outer") == 0) cfg.outer = 300;
    resolve(cfg, raw);
    cfg.threads = threads;
    fieldkit::configure_threads(threads);

    if (sim->parsed()) {
      const auto vc = fieldkit::run_simulate(cfg);
      fieldkit::write_container(cfg.output, vc);
      std::cout << "wrote " << cfg.output << "\n";
    } else if (est->parsed()) {
      cfg.validate_estimate();
      const auto input = fieldkit::read_container(cfg.input);
      const auto res = fieldkit::run_estimate(cfg, input);
      fieldkit::write_container(cfg.output, res.output);
      const std::filesystem::path log =
          cfg.log_path.empty() ? std::filesystem::path(cfg.output) / "log.csv" : std::filesystem::path(cfg.log_path);
      fieldkit::write_log_csv(log, res.log);
      const auto& last = res.log.rows.back();
      std::cout << "iterations " << last.iter << ", cost " << fieldkit::format_number(last.cost);
      if (last.rmse_hz) std::cout << ", rmse " << *last.rmse_hz << " Hz";
      std::cout << "\n";
    } else if (bench->parsed()) {
      cfg.validate_bench();
      const auto input = fieldkit::read_container(cfg.input);
      const auto rows = fieldkit::run_bench(cfg, input);
      const std::string out = cfg.output.empty() ? "bench.csv" : cfg.output;
      fieldkit::write_bench_csv(out, rows);
      for (const auto& r : rows) {
        std::cout << r.method << ": ";
        if (r.method == "reference") {
          std::cout << r.iterations << " iters, cost " << fieldkit::format_number(r.final_cost);
          if (r.final_rmse_hz) std::cout << ", rmse " << *r.final_rmse_hz << " Hz";
          std::cout << "\n";
          continue;
        }
        if (r.time_to_threshold_s)
          std::cout << *r.time_to_threshold_s << " s (" << *r.iters_to_threshold << " iters) to RMSD < "
                    << cfg.rmsd_threshold_hz << " Hz";
        else
          std::cout << "threshold not reached in " << r.iterations << " iters";
        if (r.speedup_of_ncg_ic) std::cout << ", " << *r.speedup_of_ncg_ic << "x ncg-ic time";
        std::cout << "\n";
      }
    }
  } catch (const fieldkit::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
