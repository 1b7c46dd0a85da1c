#include "fieldkit/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "fieldkit/errors.hpp"
#include "fieldkit/init.hpp"
#include "fieldkit/likelihood.hpp"
#include "fieldkit/metrics.hpp"
#include "fieldkit/regularizer.hpp"
#include "fieldkit/sim.hpp"
#include "fieldkit/waterfat.hpp"

namespace fieldkit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mode parse_mode(const std::string& s) {
  if (s == "fieldmap") return Mode::fieldmap;
  if (s == "waterfat") return Mode::waterfat;
  throw std::invalid_argument("unknown mode '" + s + "' (fieldmap, waterfat)");
}

std::string mode_name(Mode m) { return m == Mode::fieldmap ? "fieldmap" : "waterfat"; }

void validate_common(const RunConfig& c) {
  if (c.mode != "auto") parse_mode(c.mode);
  if (!(c.beta >= 0.0) || !std::isfinite(c.beta)) throw std::invalid_argument("beta must be finite and >= 0");
  if (c.reg_order != 1 && c.reg_order != 2) throw std::invalid_argument("regularizer order must be 1 or 2");
  if (c.method != "qm" && c.method != "ncg") throw std::invalid_argument("method must be qm or ncg");
  if (c.sweep < 2) throw std::invalid_argument("sweep grid size must be >= 2");
  if (c.pwls_cg < 0) throw std::invalid_argument("PWLS CG count must be >= 0");
  if (!(c.mask_threshold >= 0.0 && c.mask_threshold <= 1.0)) throw std::invalid_argument("mask threshold must be in [0, 1]");
  if (c.mask_dilation < 0) throw std::invalid_argument("mask dilation must be >= 0");
  c.solver().validate();
}

Dims dims_for(const RunConfig& c, Mode mode) {
  if (c.dims.nx > 0) return c.dims;
  return mode == Mode::fieldmap ? Dims{64, 64, 40} : Dims{96, 72, 1};
}

std::optional<FatModel> fat_from(const nlohmann::json& attrs, double field_tesla) {
  if (attrs.contains("fat_peaks")) {
    std::vector<FatPeak> peaks;
    for (const auto& p : attrs.at("fat_peaks")) peaks.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return FatModel(std::move(peaks));
  }
  return FatModel::six_peak(field_tesla);
}

nlohmann::json fat_to_json(const FatModel& fat) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : fat.peaks()) arr.push_back({p.amplitude, p.shift_hz});
  return arr;
}

struct Setup {
  Mode mode;
  EchoTimes t;
  MultiEchoImages y;
  SensitivityMaps s;
  SignalBasis basis;
  Mask mask;
  PairTermCache cache;
  DifferenceOperator C;
  std::vector<double> omega0;
  std::vector<double> truth;  // masked order rad/s, empty when unavailable
};

Setup prepare(const RunConfig& cfg, const VolumeContainer& in) {
  Mode mode = Mode::fieldmap;
  if (cfg.mode != "auto")
    mode = parse_mode(cfg.mode);
  else if (in.attributes.contains("mode"))
    mode = parse_mode(in.attributes.at("mode").get<std::string>());

  EchoTimes t(in.echo_times_s);
  if (in.n_echoes != int(t.size())) throw std::invalid_argument("manifest n_echoes does not match echo_times_s");
  MultiEchoImages y(in.dims, in.n_coils, in.n_echoes, in.get_complex("y"));
  SensitivityMaps s = in.has("s") ? SensitivityMaps(in.dims, in.n_coils, in.get_complex("s")) : SensitivityMaps::ones(in.dims);
  if (s.coils() != y.coils()) throw std::invalid_argument("sensitivity array coil count does not match y");

  std::optional<FatModel> fat;
  if (mode == Mode::waterfat) fat = fat_from(in.attributes, cfg.field_tesla);
  SignalBasis basis = build_gamma(mode, t, fat);
  Mask mask = make_mask(y, s, cfg.mask_threshold, cfg.mask_dilation);
  PairTermCache cache = precompute_cache(y, s, basis, t, mask);
  DifferenceOperator C(mask, cfg.reg_order);

  std::vector<double> omega0;
  if (mode == Mode::fieldmap) {
    omega0 = init_two_echo(y, s, t, mask);
  } else {
    const auto tilde = init_sweep(cache, {cfg.sweep, cfg.pwls_cg});
    omega0 = init_pwls(tilde, cache.rho, C, cfg.beta, cfg.pwls_cg);
  }

  std::vector<double> truth;
  if (in.has("fieldmap_true_hz")) {
    const auto hz = in.get_real("fieldmap_true_hz");
    std::vector<double> rad(hz.size());
    for (std::size_t j = 0; j < hz.size(); ++j) rad[j] = kTwoPi * hz[j];
    truth = mask.gather<double>(rad);
  }
  return Setup{mode, std::move(t), std::move(y), std::move(s), std::move(basis), std::move(mask),
               std::move(cache), std::move(C), std::move(omega0), std::move(truth)};
}

std::vector<double> to_hz_volume(const Mask& mask, std::span<const double> omega) {
  std::vector<double> hz(omega.size());
  for (std::size_t k = 0; k < hz.size(); ++k) hz[k] = omega[k] / kTwoPi;
  return mask.scatter<double>(hz);
}

}  // namespace

SolverConfig RunConfig::solver() const {
  SolverConfig s;
  s.preconditioner = preconditioner;
  s.ict_scale = ict_scale;
  s.outer = outer;
  s.inner = inner;
  s.grad_tol = grad_tol;
  return s;
}

void RunConfig::validate_estimate() const {
  validate_common(*this);
}

void RunConfig::validate_simulate() const {
  if (mode != "auto") parse_mode(mode);
  if (dims.nx < 0 || dims.ny < 0 || dims.nz < 0) throw std::invalid_argument("volume size must be positive");
  if (coils < 0) throw std::invalid_argument("coil count must be >= 1");
  if (std::isnan(snr_db)) throw std::invalid_argument("SNR must be a number or inf");
  if (!echo_times_s.empty()) EchoTimes check(echo_times_s);
  if (!(field_tesla > 0.0)) throw std::invalid_argument("field strength must be > 0");
  if (!(scale >= 0.0)) throw std::invalid_argument("phantom scale must be >= 0");
}

void RunConfig::validate_bench() const {
  validate_common(*this);
  if (reference_outer < 1) throw std::invalid_argument("reference iteration count must be >= 1");
  if (!(rmsd_threshold_hz > 0.0)) throw std::invalid_argument("RMSD threshold must be > 0");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["beta"] = beta_text;
  j["beta_value"] = beta;
  j["reg_order"] = reg_order;
  j["method"] = method;
  j["preconditioner"] = std::string(to_string(preconditioner));
  j["ict_scale"] = ict_scale;
  j["outer"] = outer;
  j["inner"] = inner;
  j["grad_tol"] = grad_tol;
  j["sweep"] = sweep;
  j["pwls_cg"] = pwls_cg;
  j["seed"] = seed;
  j["mask_threshold"] = mask_threshold;
  j["mask_dilation"] = mask_dilation;
  j["size"] = {dims.nx, dims.ny, dims.nz};
  j["coils"] = coils;
  j["snr_db"] = std::isfinite(snr_db) ? nlohmann::json(snr_db) : nlohmann::json("inf");
  j["echo_times_s"] = echo_times_s;
  j["field_tesla"] = field_tesla;
  j["scale"] = scale;
  j["reference_outer"] = reference_outer;
  j["rmsd_threshold_hz"] = rmsd_threshold_hz;
  return j;
}

std::vector<double> waterfat_echo_times() {
  std::vector<double> t;
  for (int l = 0; l < 8; ++l) t.push_back(1.5e-3 + 2.3e-3 * l);
  return t;
}

double default_phantom_scale(Mode mode) { return mode == Mode::fieldmap ? 30.0 : 100.0; }

VolumeContainer run_simulate(const RunConfig& cfg) {
  cfg.validate_simulate();
  const Mode mode = cfg.mode == "auto" ? Mode::fieldmap : parse_mode(cfg.mode);
  const Dims dims = dims_for(cfg, mode);
  const int coils = cfg.coils > 0 ? cfg.coils : (mode == Mode::fieldmap ? 4 : 1);
  const auto times = !cfg.echo_times_s.empty() ? cfg.echo_times_s
                     : mode == Mode::fieldmap  ? std::vector<double>{0.0, 0.002, 0.010}
                                               : waterfat_echo_times();
  const double scale = cfg.scale > 0.0 ? cfg.scale : default_phantom_scale(mode);

  const EchoTimes t(times);
  std::optional<FatModel> fat;
  if (mode == Mode::waterfat) fat = FatModel::six_peak(cfg.field_tesla);
  const SignalBasis basis = build_gamma(mode, t, fat);
  const Phantom ph = mode == Mode::fieldmap ? make_brain_phantom(dims, scale) : make_waterfat_phantom(dims, scale);
  const SensitivityMaps s = sim_coil_maps(dims, coils);
  const auto field = ph.field_rad();
  const MultiEchoImages clean = forward_model(ph.components(), field, s, t, basis);
  const MultiEchoImages y = add_noise_snr(clean, cfg.snr_db, cfg.seed);

  VolumeContainer vc;
  vc.dims = dims;
  vc.n_coils = coils;
  vc.n_echoes = int(times.size());
  vc.echo_times_s = times;
  vc.put_complex("y", y.data());
  vc.put_complex("s", s.data());
  vc.put_real("fieldmap_true_hz", ph.field_hz);
  vc.put_real("magnitude_true", ph.magnitude);
  if (ph.has_components()) {
    vc.put_complex("water_true", ph.water);
    vc.put_complex("fat_true", ph.fat);
  }
  vc.attributes["mode"] = mode_name(mode);
  vc.attributes["noiseless"] = !std::isfinite(cfg.snr_db);
  if (fat) vc.attributes["fat_peaks"] = fat_to_json(*fat);
  RunConfig resolved = cfg;
  resolved.mode = mode_name(mode);
  resolved.dims = dims;
  resolved.coils = coils;
  resolved.echo_times_s = times;
  resolved.scale = scale;
  vc.attributes["config"] = resolved.to_json();
  return vc;
}

EstimateResult run_estimate(const RunConfig& cfg, const VolumeContainer& input) {
  validate_common(cfg);
  Setup su = prepare(cfg, input);
  const Problem problem{su.cache, su.C, cfg.beta};
  Monitor monitor;
  monitor.truth = su.truth;

  SolveResult sol = cfg.method == "qm" ? qm_baseline(problem, su.omega0, cfg.solver(), monitor)
                                       : ncg_mls(problem, su.omega0, cfg.solver(), monitor);

  EstimateResult r;
  r.mode = su.mode;
  r.mask = su.mask;
  r.omega0 = su.omega0;
  r.omega = sol.omega;
  r.log = std::move(sol.log);

  VolumeContainer& out = r.output;
  out.dims = input.dims;
  out.n_coils = input.n_coils;
  out.n_echoes = input.n_echoes;
  out.echo_times_s = input.echo_times_s;
  out.put_real("fieldmap_hz", to_hz_volume(su.mask, r.omega));
  out.put_real("fieldmap_init_hz", to_hz_volume(su.mask, r.omega0));
  out.put_bytes("mask", su.mask.inside());
  if (su.mode == Mode::waterfat) {
    auto comp = separate(su.y, su.s, su.basis, su.t, su.mask, r.omega);
    r.water = std::move(comp.water);
    r.fat = std::move(comp.fat);
    out.put_complex("water", r.water);
    out.put_complex("fat", r.fat);
  }
  RunConfig resolved = cfg;
  resolved.mode = mode_name(su.mode);
  out.attributes["mode"] = mode_name(su.mode);
  out.attributes["config"] = resolved.to_json();
  out.attributes["final_cost"] = r.log.rows.back().cost;
  out.attributes["iterations"] = r.log.rows.back().iter;
  out.attributes["masked_voxels"] = su.mask.size();
  if (su.basis.fat) out.attributes["fat_peaks"] = fat_to_json(*su.basis.fat);
  return r;
}

std::vector<BenchRow> run_bench(const RunConfig& cfg, const VolumeContainer& input) {
  cfg.validate_bench();
  Setup su = prepare(cfg, input);
  const Problem problem{su.cache, su.C, cfg.beta};

  SolverConfig ref_cfg = cfg.solver();
  ref_cfg.preconditioner = Preconditioner::ict;
  ref_cfg.outer = cfg.reference_outer;
  SolveResult ref_sol = ncg_mls(problem, su.omega0, ref_cfg, Monitor{su.truth, {}, std::nullopt});
  const std::vector<double> reference = ref_sol.omega;

  struct Method {
    const char* name;
    bool qm;
    Preconditioner p;
  };
  const Method methods[] = {{"qm", true, Preconditioner::none},
                            {"ncg", false, Preconditioner::none},
                            {"ncg-d", false, Preconditioner::diagonal},
                            {"ncg-ic", false, Preconditioner::ict}};
  std::vector<BenchRow> rows;
  {
    BenchRow row;
    row.method = "reference";
    row.iterations = ref_sol.log.rows.back().iter;
    row.final_cost = ref_sol.log.rows.back().cost;
    row.final_rmse_hz = ref_sol.log.rows.back().rmse_hz;
    row.log = std::move(ref_sol.log);
    rows.push_back(std::move(row));
  }
  for (const auto& m : methods) {
    SolverConfig sc = cfg.solver();
    sc.preconditioner = m.p;
    Monitor mon;
    mon.truth = su.truth;
    mon.reference = reference;
    mon.stop_below_rmsd_hz = cfg.rmsd_threshold_hz;
    SolveResult sol = m.qm ? qm_baseline(problem, su.omega0, sc, mon) : ncg_mls(problem, su.omega0, sc, mon);
    BenchRow row;
    row.method = m.name;
    row.iterations = sol.log.rows.back().iter;
    row.final_cost = sol.log.rows.back().cost;
    row.final_rmsd_hz = sol.log.rows.back().rmsd_hz.value_or(0.0);
    row.final_rmse_hz = sol.log.rows.back().rmse_hz;
    if (const auto c = first_below(sol.log, cfg.rmsd_threshold_hz)) {
      row.time_to_threshold_s = c->time_s;
      row.iters_to_threshold = c->iter;
    }
    row.log = std::move(sol.log);
    rows.push_back(std::move(row));
  }
  const auto& ic = rows.back();
  for (auto& row : rows)
    if (row.method != "reference" && row.time_to_threshold_s && ic.time_to_threshold_s && *ic.time_to_threshold_s > 0.0)
      row.speedup_of_ncg_ic = *row.time_to_threshold_s / *ic.time_to_threshold_s;
  return rows;
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "method,iterations,time_to_threshold_s,iters_to_threshold,final_cost,final_rmsd_hz,final_rmse_hz,"
       "time_ratio_vs_ncg_ic\n";
  for (const auto& r : rows) {
    f << r.method << ',' << r.iterations << ','
      << (r.time_to_threshold_s ? format_number(*r.time_to_threshold_s) : "") << ','
      << (r.iters_to_threshold ? std::to_string(*r.iters_to_threshold) : "") << ',' << format_number(r.final_cost)
      << ',' << format_number(r.final_rmsd_hz) << ',' << (r.final_rmse_hz ? format_number(*r.final_rmse_hz) : "")
      << ',' << (r.speedup_of_ncg_ic ? format_number(*r.speedup_of_ncg_ic) : "") << '\n';
  }
}

}  // namespace fieldkit
