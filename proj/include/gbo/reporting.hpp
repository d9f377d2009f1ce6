#pragma once
// File formats around the benchmark harness: JSON configs (partial overlays
// with unknown-key rejection), the results manifest, CSV tables, a cached
// ground-truth file, and reloading emitted runs for verification.
//
// Numbers are written with enough digits to round-trip exactly, so a reload
// followed by recomputation reproduces the emitted summaries byte for byte.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gbo/bench.hpp"
#include "gbo/version.hpp"

namespace gbo {

using nlohmann::json;

namespace detail {

// %.17g guarantees exact double round trip through text.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(ctx + ": bad number '" + s + "'");
  }
}

// JSON has no literal for infinities, so nonfinite doubles travel as strings.
inline json json_double(double v) {
  if (std::isfinite(v)) return json(v);
  if (std::isnan(v)) return json("nan");
  return json(v > 0 ? "inf" : "-inf");
}

inline double double_from_json(const json& j, const std::string& ctx) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw std::runtime_error(ctx + ": expected a number, got '" + s + "'");
  }
  throw std::runtime_error(ctx + ": expected a number");
}

inline void require_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw std::runtime_error(ctx + ": expected a JSON object");
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& ctx) {
  require_object(j, ctx);
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::runtime_error(ctx + ": unknown key '" + item.key() + "'");
  }
}

inline void get_double(const json& j, const char* key, double& out,
                       const std::string& ctx) {
  if (j.contains(key)) out = double_from_json(j.at(key), ctx + "." + key);
}

inline void get_int(const json& j, const char* key, int& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw std::runtime_error(ctx + "." + key + ": expected an integer");
  out = v.get<int>();
}

inline void get_u64(const json& j, const char* key, std::uint64_t& out,
                    const std::string& ctx) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer())
    throw std::runtime_error(ctx + "." + key + ": expected an integer");
  out = v.get<std::uint64_t>();
}

}  // namespace detail

// ---- config <-> JSON -------------------------------------------------------

inline json to_json(const LoopConfig& c) {
  return {{"sim_step", c.sim_step},   {"horizon", c.horizon},
          {"r_low", c.r_low},         {"r_high", c.r_high},
          {"noise_std", c.noise_std}, {"trace_length", c.trace_length},
          {"rng_seed", c.rng_seed}};
}

inline void apply_json(LoopConfig& c, const json& j) {
  detail::check_keys(j,
                     {"sim_step", "horizon", "r_low", "r_high", "noise_std",
                      "trace_length", "rng_seed"},
                     "loop");
  detail::get_double(j, "sim_step", c.sim_step, "loop");
  detail::get_double(j, "horizon", c.horizon, "loop");
  detail::get_double(j, "r_low", c.r_low, "loop");
  detail::get_double(j, "r_high", c.r_high, "loop");
  detail::get_double(j, "noise_std", c.noise_std, "loop");
  detail::get_int(j, "trace_length", c.trace_length, "loop");
  detail::get_u64(j, "rng_seed", c.rng_seed, "loop");
}

inline json to_json(const FeasibleSet& f) {
  return {{"kp_min", f.kp_min},
          {"kp_max", f.kp_max},
          {"ki_min", f.ki_min},
          {"ki_max", f.ki_max}};
}

inline void apply_json(FeasibleSet& f, const json& j) {
  detail::check_keys(j, {"kp_min", "kp_max", "ki_min", "ki_max"}, "feasible");
  detail::get_double(j, "kp_min", f.kp_min, "feasible");
  detail::get_double(j, "kp_max", f.kp_max, "feasible");
  detail::get_double(j, "ki_min", f.ki_min, "feasible");
  detail::get_double(j, "ki_max", f.ki_max, "feasible");
}

inline json to_json(const CostWeights& w) {
  return {{"w1", w.w1}, {"w2", w.w2}, {"w3", w.w3}, {"w4", w.w4}};
}

inline void apply_json(CostWeights& w, const json& j) {
  detail::check_keys(j, {"w1", "w2", "w3", "w4"}, "weights");
  detail::get_double(j, "w1", w.w1, "weights");
  detail::get_double(j, "w2", w.w2, "weights");
  detail::get_double(j, "w3", w.w3, "weights");
  detail::get_double(j, "w4", w.w4, "weights");
}

inline json to_json(const ContinuousTransferFunction& p) {
  return {{"num", p.num}, {"den", p.den}, {"dead_time", p.dead_time}};
}

inline void apply_json(ContinuousTransferFunction& p, const json& j) {
  detail::check_keys(j, {"num", "den", "dead_time"}, "plant");
  if (j.contains("num")) p.num = j.at("num").get<std::vector<double>>();
  if (j.contains("den")) p.den = j.at("den").get<std::vector<double>>();
  detail::get_double(j, "dead_time", p.dead_time, "plant");
}

inline json to_json(const GuidedBoConfig& c) {
  json j = {{"eta1", detail::json_double(c.eta1)},
            {"eta2", detail::json_double(c.eta2)},
            {"eta3", c.eta3},
            {"delta_tilde", c.delta_tilde},
            {"n_ei", c.n_ei},
            {"n_max", c.n_max},
            {"n0", c.n0},
            {"noise_std", c.noise_std},
            {"grid_resolution", c.grid_resolution},
            {"twin_order", c.twin_order},
            {"twin_param_scale", c.twin_param_scale},
            {"loop", to_json(c.loop)},
            {"feasible", to_json(c.feasible)},
            {"weights", to_json(c.weights)},
            {"rng_seed", c.rng_seed}};
  if (c.forced_schedule)
    j["forced_schedule"] = {{"period", c.forced_schedule->period},
                            {"session_length", c.forced_schedule->session_length}};
  return j;
}

inline void apply_json(GuidedBoConfig& c, const json& j) {
  detail::check_keys(j,
                     {"eta1", "eta2", "eta3", "delta_tilde", "n_ei", "n_max", "n0",
                      "noise_std", "grid_resolution", "twin_order",
                      "twin_param_scale", "loop", "feasible", "weights", "rng_seed",
                      "forced_schedule"},
                     "tuner");
  detail::get_double(j, "eta1", c.eta1, "tuner");
  detail::get_double(j, "eta2", c.eta2, "tuner");
  detail::get_double(j, "eta3", c.eta3, "tuner");
  detail::get_double(j, "delta_tilde", c.delta_tilde, "tuner");
  detail::get_int(j, "n_ei", c.n_ei, "tuner");
  detail::get_int(j, "n_max", c.n_max, "tuner");
  detail::get_int(j, "n0", c.n0, "tuner");
  detail::get_double(j, "noise_std", c.noise_std, "tuner");
  detail::get_int(j, "grid_resolution", c.grid_resolution, "tuner");
  detail::get_int(j, "twin_order", c.twin_order, "tuner");
  detail::get_double(j, "twin_param_scale", c.twin_param_scale, "tuner");
  if (j.contains("loop")) apply_json(c.loop, j.at("loop"));
  if (j.contains("feasible")) apply_json(c.feasible, j.at("feasible"));
  if (j.contains("weights")) apply_json(c.weights, j.at("weights"));
  detail::get_u64(j, "rng_seed", c.rng_seed, "tuner");
  if (j.contains("forced_schedule")) {
    const json& f = j.at("forced_schedule");
    if (f.is_null()) {
      c.forced_schedule.reset();
    } else {
      detail::check_keys(f, {"period", "session_length"}, "forced_schedule");
      ForcedSchedule s = c.forced_schedule.value_or(ForcedSchedule{});
      detail::get_int(f, "period", s.period, "forced_schedule");
      detail::get_int(f, "session_length", s.session_length, "forced_schedule");
      c.forced_schedule = s;
    }
  }
}

inline json to_json(const BenchConfig& c) {
  json j = {{"tuner", to_json(c.tuner)},
            {"plant", to_json(c.plant)},
            {"batches", c.batches},
            {"modes", c.modes},
            {"ground_truth_grid", c.ground_truth_grid},
            {"output_dir", c.output_dir}};
  if (c.sweep) j["sweep"] = {{"name", c.sweep->name}, {"values", c.sweep->values}};
  return j;
}

inline void apply_json(BenchConfig& c, const json& j) {
  detail::check_keys(j,
                     {"tuner", "plant", "batches", "modes", "ground_truth_grid",
                      "sweep", "output_dir"},
                     "bench");
  if (j.contains("tuner")) apply_json(c.tuner, j.at("tuner"));
  if (j.contains("plant")) apply_json(c.plant, j.at("plant"));
  detail::get_int(j, "batches", c.batches, "bench");
  if (j.contains("modes")) c.modes = j.at("modes").get<std::vector<std::string>>();
  detail::get_int(j, "ground_truth_grid", c.ground_truth_grid, "bench");
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (s.is_null()) {
      c.sweep.reset();
    } else {
      detail::check_keys(s, {"name", "values"}, "sweep");
      SweepSpec spec = c.sweep.value_or(SweepSpec{});
      if (s.contains("name")) spec.name = s.at("name").get<std::string>();
      if (s.contains("values"))
        spec.values = s.at("values").get<std::vector<double>>();
      c.sweep = spec;
    }
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
}

// A config file is either BenchConfig-shaped or a bare tuner overlay; the
// two key sets are disjoint, so membership decides.
inline BenchConfig parse_bench_config(const json& j) {
  detail::require_object(j, "config");
  bool tuner_level = false;
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    if (k != "tuner" && k != "plant" && k != "batches" && k != "modes" &&
        k != "ground_truth_grid" && k != "sweep" && k != "output_dir")
      tuner_level = true;
  }
  BenchConfig cfg;
  if (tuner_level) apply_json(cfg.tuner, j);
  else apply_json(cfg, j);
  return cfg;
}

inline BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("config: parse error in '" + path + "': " + e.what());
  }
  return parse_bench_config(j);
}

// ---- ground-truth cache ----------------------------------------------------

namespace detail {

// Everything the noise-free lattice search depends on.
inline json ground_truth_key(const BenchConfig& cfg) {
  return {{"plant", to_json(cfg.plant)},
          {"weights", to_json(cfg.tuner.weights)},
          {"loop", to_json(cfg.tuner.loop)},
          {"feasible", to_json(cfg.tuner.feasible)},
          {"grid", cfg.ground_truth_grid}};
}

}  // namespace detail

inline void save_ground_truth_cache(const std::string& dir, const BenchConfig& cfg,
                                    const GroundTruth& truth) {
  std::filesystem::create_directories(dir);
  const json j = {{"key", detail::ground_truth_key(cfg)},
                  {"kp", truth.theta.kp},
                  {"ki", truth.theta.ki},
                  {"cost", truth.cost}};
  std::ofstream out(dir + "/ground_truth.json");
  if (!out) throw std::runtime_error("cannot write " + dir + "/ground_truth.json");
  out << j.dump(2) << "\n";
}

// Returns the cached optimum only when the cache key matches the config
// exactly; any change to plant, weights, loop, box, or grid invalidates it.
inline std::optional<GroundTruth> load_ground_truth_cache(const std::string& dir,
                                                          const BenchConfig& cfg) {
  std::ifstream in(dir + "/ground_truth.json");
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (!j.is_object() || !j.contains("key") || j.at("key") != detail::ground_truth_key(cfg))
    return std::nullopt;
  try {
    GroundTruth t;
    t.theta.kp = j.at("kp").get<double>();
    t.theta.ki = j.at("ki").get<double>();
    t.cost = j.at("cost").get<double>();
    return t;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// ---- CSV rendering ---------------------------------------------------------

namespace detail {

inline const char* kIterationsHeader =
    "mode,batch,seed,row,iteration,provenance,kp,ki,cost,posterior_std,"
    "twin_session,session_length,incumbent_cost,incumbent_kp,incumbent_ki,"
    "incumbent_ratio";

}  // namespace detail

inline std::string render_iterations_csv(const std::vector<BatchResult>& batches,
                                         const GroundTruth& truth) {
  std::string out(detail::kIterationsHeader);
  out += "\n";
  for (const auto& b : batches) {
    if (b.failed) continue;
    for (size_t row = 0; row < b.history.records.size(); ++row) {
      const TuningRecord& r = b.history.records[row];
      out += b.mode;
      out += ',' + std::to_string(b.batch_index);
      out += ',' + std::to_string(b.seed);
      out += ',' + std::to_string(row);
      out += ',' + std::to_string(r.iteration);
      out += ',';
      out += r.provenance == Provenance::kRealPlant ? "real" : "twin";
      out += ',' + detail::fmt_double(r.theta.kp);
      out += ',' + detail::fmt_double(r.theta.ki);
      out += ',' + detail::fmt_double(r.cost);
      out += ',' + detail::fmt_double(r.posterior_std);
      out += ',' + std::to_string(r.twin_session ? 1 : 0);
      out += ',' + std::to_string(r.session_length);
      out += ',' + detail::fmt_double(r.incumbent_cost);
      out += ',' + detail::fmt_double(r.incumbent_theta.kp);
      out += ',' + detail::fmt_double(r.incumbent_theta.ki);
      out += ',' + detail::fmt_double(r.incumbent_cost / truth.cost);
      out += '\n';
    }
  }
  return out;
}

inline std::string render_convergence_csv(const std::vector<ModeSummary>& summaries) {
  std::string out =
      "mode,evaluation,count,mean,lo68,hi68,lo90,hi90,lo95,hi95,lo99,hi99\n";
  for (const auto& s : summaries) {
    for (const auto& row : s.bands) {
      out += s.mode;
      out += ',' + std::to_string(row.evaluation);
      out += ',' + std::to_string(row.count);
      out += ',' + detail::fmt_double(row.mean);
      out += ',' + detail::fmt_double(row.lo68);
      out += ',' + detail::fmt_double(row.hi68);
      out += ',' + detail::fmt_double(row.lo90);
      out += ',' + detail::fmt_double(row.hi90);
      out += ',' + detail::fmt_double(row.lo95);
      out += ',' + detail::fmt_double(row.hi95);
      out += ',' + detail::fmt_double(row.lo99);
      out += ',' + detail::fmt_double(row.hi99);
      out += '\n';
    }
  }
  return out;
}

inline std::string render_summary_csv(const std::vector<ModeSummary>& summaries) {
  std::string out =
      "mode,batches,failed,final_ratio_mean,final_ratio_median,mean_activations";
  for (double t : kRatioThresholds) {
    out += ",reached_" + detail::fmt_double(t);
    out += ",mean_evals_" + detail::fmt_double(t);
  }
  out += '\n';
  for (const auto& s : summaries) {
    out += s.mode;
    out += ',' + std::to_string(s.batches);
    out += ',' + std::to_string(s.failed);
    out += ',' + detail::fmt_double(s.final_ratio_mean);
    out += ',' + detail::fmt_double(s.final_ratio_median);
    out += ',' + detail::fmt_double(s.mean_activations);
    for (const auto& t : s.thresholds) {
      out += ',' + std::to_string(t.reached);
      out += ',' + detail::fmt_double(t.mean_evaluations);
    }
    out += '\n';
  }
  return out;
}

inline std::string render_histogram_csv(const std::vector<ModeSummary>& summaries) {
  std::string out = "mode,bin_lo,bin_hi,count\n";
  for (const auto& s : summaries) {
    for (size_t i = 0; i < s.histogram.size(); ++i) {
      const bool overflow = i + 1 == s.histogram.size();
      out += s.mode;
      out += ',' + detail::fmt_double(1.0 + 0.25 * static_cast<double>(i));
      out += ',';
      out += overflow ? "inf" : detail::fmt_double(1.0 + 0.25 * (static_cast<double>(i) + 1.0));
      out += ',' + std::to_string(s.histogram[i]);
      out += '\n';
    }
  }
  return out;
}

// ---- emission --------------------------------------------------------------

inline std::string iso_timestamp_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json render_manifest(const BenchResult& result, const BenchConfig& cfg,
                            const std::string& timestamp) {
  json failures = json::array();
  for (const auto& b : result.batches)
    if (b.failed)
      failures.push_back({{"mode", b.mode},
                          {"batch", b.batch_index},
                          {"seed", b.seed},
                          {"error", b.error}});
  json nominal = json::array();
  for (const auto& n : result.nominal)
    nominal.push_back({{"kp", n.gains.kp},
                       {"ki", n.gains.ki},
                       {"cost", n.cost},
                       {"ratio", n.ratio}});
  return {{"version", kVersion},
          {"generated_at", timestamp},
          {"config", to_json(cfg)},
          {"ground_truth",
           {{"kp", result.ground_truth.theta.kp},
            {"ki", result.ground_truth.theta.ki},
            {"cost", result.ground_truth.cost}}},
          {"nominal", nominal},
          {"batch_count", static_cast<int>(result.batches.size())},
          {"failed_count", result.failed_count},
          {"failures", failures}};
}

// Renders every file first, then writes, so a bad path cannot shred a
// half-emitted run.
inline void emit_results(const BenchResult& result, const BenchConfig& cfg,
                         const std::string& dir,
                         const std::string& timestamp = iso_timestamp_now()) {
  const std::string manifest = render_manifest(result, cfg, timestamp).dump(2) + "\n";
  const std::string iterations = render_iterations_csv(result.batches, result.ground_truth);
  const std::string convergence = render_convergence_csv(result.summaries);
  const std::string summary = render_summary_csv(result.summaries);
  const std::string histogram = render_histogram_csv(result.summaries);

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto write = [&](const char* name, const std::string& content) {
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
  };
  write("manifest.json", manifest);
  write("iterations.csv", iterations);
  write("convergence.csv", convergence);
  write("summary.csv", summary);
  write("histogram.csv", histogram);
  save_ground_truth_cache(dir, cfg, result.ground_truth);
}

// ---- reloading emitted runs ------------------------------------------------

struct EmittedRun {
  json manifest;
  BenchConfig config;
  GroundTruth ground_truth;
  std::vector<BatchResult> batches;  // emitted order; failures reconstructed
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline EmittedRun load_results(const std::string& dir) {
  EmittedRun run;
  {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw std::runtime_error("cannot open " + dir + "/manifest.json");
    in >> run.manifest;
  }
  run.config = parse_bench_config(run.manifest.at("config"));
  const json& gt = run.manifest.at("ground_truth");
  run.ground_truth.theta.kp = gt.at("kp").get<double>();
  run.ground_truth.theta.ki = gt.at("ki").get<double>();
  run.ground_truth.cost = gt.at("cost").get<double>();

  const std::string csv = detail::read_file(dir + "/iterations.csv");
  std::istringstream lines(csv);
  std::string line;
  if (!std::getline(lines, line) || line != detail::kIterationsHeader)
    throw std::runtime_error(dir + "/iterations.csv: unexpected header");
  BatchResult* cur = nullptr;
  int lineno = 1;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    const std::string ctx = dir + "/iterations.csv:" + std::to_string(lineno);
    if (f.size() != 16) throw std::runtime_error(ctx + ": expected 16 fields");
    const int batch = std::stoi(f[1]);
    if (!cur || cur->mode != f[0] || cur->batch_index != batch) {
      run.batches.emplace_back();
      cur = &run.batches.back();
      cur->mode = f[0];
      cur->batch_index = batch;
      cur->seed = std::stoull(f[2]);
    }
    TuningRecord r;
    r.iteration = std::stoi(f[4]);
    if (f[5] != "real" && f[5] != "twin")
      throw std::runtime_error(ctx + ": bad provenance '" + f[5] + "'");
    r.provenance = f[5] == "real" ? Provenance::kRealPlant : Provenance::kTwin;
    r.theta.kp = detail::parse_double(f[6], ctx);
    r.theta.ki = detail::parse_double(f[7], ctx);
    r.cost = detail::parse_double(f[8], ctx);
    r.posterior_std = detail::parse_double(f[9], ctx);
    r.twin_session = f[10] == "1";
    r.session_length = std::stoi(f[11]);
    r.incumbent_cost = detail::parse_double(f[12], ctx);
    r.incumbent_theta.kp = detail::parse_double(f[13], ctx);
    r.incumbent_theta.ki = detail::parse_double(f[14], ctx);
    cur->history.records.push_back(r);
    if (r.provenance == Provenance::kRealPlant) {
      cur->incumbent_ratio.push_back(detail::parse_double(f[15], ctx));
      if (r.twin_session) ++cur->twin_activation_count;
    }
  }

  for (const auto& fj : run.manifest.at("failures")) {
    BatchResult b;
    b.mode = fj.at("mode").get<std::string>();
    b.batch_index = fj.at("batch").get<int>();
    b.seed = fj.at("seed").get<std::uint64_t>();
    b.failed = true;
    b.error = fj.at("error").get<std::string>();
    run.batches.push_back(b);
  }
  return run;
}

inline std::vector<ModeSummary> recompute_summaries(const EmittedRun& run) {
  std::vector<ModeSummary> out;
  for (const auto& m : run.config.modes)
    out.push_back(summarize_mode(m, run.batches, run.ground_truth));
  return out;
}

struct VerifyOutcome {
  bool ok = true;
  std::vector<std::string> mismatched;  // file names whose bytes differ
};

// Re-derives the summary tables from the emitted raw iterations and compares
// them byte for byte with what is on disk.
inline VerifyOutcome verify_emitted_summaries(const std::string& dir) {
  const EmittedRun run = load_results(dir);
  const std::vector<ModeSummary> summaries = recompute_summaries(run);
  VerifyOutcome out;
  const std::pair<const char*, std::string> expected[] = {
      {"convergence.csv", render_convergence_csv(summaries)},
      {"summary.csv", render_summary_csv(summaries)},
      {"histogram.csv", render_histogram_csv(summaries)},
  };
  for (const auto& [name, content] : expected) {
    if (detail::read_file(dir + "/" + name) != content) {
      out.ok = false;
      out.mismatched.push_back(name);
    }
  }
  return out;
}

}  // namespace gbo
