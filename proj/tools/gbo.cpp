// Command-line harness around the tuning library: single tuning runs,
// noise-free ground-truth search, Monte Carlo benchmarks with optional
// parameter sweeps, and verification of previously emitted result sets.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gbo/reporting.hpp"
#include "gbo/version.hpp"

namespace {

int effective_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

gbo::BenchConfig load_or_default(const std::string& path) {
  if (path.empty()) return gbo::BenchConfig{};
  return gbo::load_bench_config(path);
}

// Precedence: GBO_SEED env var, then --seed, then the config file.
void apply_seed_overrides(gbo::BenchConfig& cfg,
                          const std::optional<std::uint64_t>& cli_seed) {
  if (cli_seed) cfg.tuner.rng_seed = *cli_seed;
  if (const char* env = std::getenv("GBO_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0')
      throw std::runtime_error("GBO_SEED is not an unsigned integer: '" +
                               std::string(env) + "'");
    cfg.tuner.rng_seed = v;
  }
}

gbo::SweepSpec parse_sweep(const std::string& text) {
  const size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
    throw std::runtime_error("--sweep expects name=v1,v2,... got '" + text + "'");
  gbo::SweepSpec spec;
  spec.name = text.substr(0, eq);
  std::string rest = text.substr(eq + 1);
  size_t pos = 0;
  while (pos <= rest.size()) {
    const size_t comma = rest.find(',', pos);
    const std::string tok =
        rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    spec.values.push_back(gbo::detail::parse_double(tok, "--sweep"));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return spec;
}

gbo::GroundTruth obtain_ground_truth(const gbo::BenchConfig& cfg,
                                     const std::string& cache_dir, int workers) {
  if (!cache_dir.empty()) {
    if (auto hit = gbo::load_ground_truth_cache(cache_dir, cfg)) {
      std::printf("ground truth (cached): kp=%.6f ki=%.6f J=%.6f\n",
                  hit->theta.kp, hit->theta.ki, hit->cost);
      return *hit;
    }
  }
  const gbo::GroundTruth t = gbo::ground_truth_search(
      cfg.plant, cfg.tuner, cfg.ground_truth_grid, workers);
  std::printf("ground truth (grid %d): kp=%.6f ki=%.6f J=%.6f\n",
              cfg.ground_truth_grid, t.theta.kp, t.theta.ki, t.cost);
  return t;
}

void print_history(const gbo::TuningHistory& h) {
  std::printf("  %4s  %-5s  %8s  %8s  %12s  %12s\n", "#", "src", "kp", "ki",
              "cost", "best");
  for (const auto& r : h.records) {
    std::printf("  %4d  %-5s  %8.4f  %8.4f  %12.6f  %12.6f%s\n", r.iteration,
                r.provenance == gbo::Provenance::kRealPlant ? "real" : "twin",
                r.theta.kp, r.theta.ki, r.cost, r.incumbent_cost,
                r.twin_session && r.provenance == gbo::Provenance::kRealPlant
                    ? "  [after twin session]"
                    : "");
  }
  std::printf("final: kp=%.6f ki=%.6f cost=%.6f (%d real, %d twin evaluations)\n",
              h.final_incumbent_theta().kp, h.final_incumbent_theta().ki,
              h.final_incumbent_cost(), h.real_count(), h.twin_count());
}

void print_summaries(const std::vector<gbo::ModeSummary>& summaries) {
  std::printf("%-8s %5s %5s %12s %12s %6s", "mode", "n", "fail", "final mean",
              "final med", "twin");
  for (double t : gbo::kRatioThresholds) std::printf("  evals<=%.2f", t);
  std::printf("\n");
  for (const auto& s : summaries) {
    std::printf("%-8s %5d %5d %12.4f %12.4f %6.1f", s.mode.c_str(), s.batches,
                s.failed, s.final_ratio_mean, s.final_ratio_median,
                s.mean_activations);
    for (const auto& t : s.thresholds) {
      if (t.reached > 0)
        std::printf("  %6.1f (%2d)", t.mean_evaluations, t.reached);
      else
        std::printf("  %6s (%2d)", "-", t.reached);
    }
    std::printf("\n");
  }
}

void print_nominal(const std::vector<gbo::NominalReference>& refs) {
  for (const auto& r : refs)
    std::printf("baseline kp=%.2f ki=%.2f: J=%.6f ratio=%.4f\n", r.gains.kp,
                r.gains.ki, r.cost, r.ratio);
}

int cmd_tune(const std::string& config_path, const std::string& mode,
             const std::optional<std::uint64_t>& seed, const std::string& out_dir,
             int workers) {
  gbo::BenchConfig cfg = load_or_default(config_path);
  apply_seed_overrides(cfg, seed);
  cfg.modes = {mode};
  cfg.batches = 1;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.validate();

  if (out_dir.empty()) {
    // print-only run, no grid search
    if (mode == "nominal") {
      for (const auto& gains : gbo::kBaselineControllers)
        std::printf("baseline kp=%.2f ki=%.2f: J=%.6f\n", gains.kp, gains.ki,
                    gbo::true_cost(cfg.plant, gains, cfg.tuner.weights,
                                   cfg.tuner.loop));
      return 0;
    }
    const auto eval =
        gbo::make_plant_evaluator(cfg.plant, cfg.tuner.loop, cfg.tuner.weights);
    gbo::TuningHistory h;
    if (mode == "bo") h = gbo::run_bo(eval, cfg.tuner);
    else if (mode == "guided") h = gbo::run_guided_bo(eval, cfg.tuner);
    else h = gbo::run_forced_schedule(eval, cfg.tuner);
    std::printf("mode %s, seed %llu\n", mode.c_str(),
                static_cast<unsigned long long>(cfg.tuner.rng_seed));
    print_history(h);
    return 0;
  }

  const gbo::GroundTruth truth =
      obtain_ground_truth(cfg, out_dir, effective_workers(workers));
  const gbo::BenchResult result = gbo::run_monte_carlo(cfg, 1, truth);
  gbo::emit_results(result, cfg, out_dir);
  std::printf("mode %s, seed %llu\n", mode.c_str(),
              static_cast<unsigned long long>(cfg.tuner.rng_seed));
  if (!result.batches.empty() && !result.batches[0].failed) {
    print_history(result.batches[0].history);
    if (!result.batches[0].incumbent_ratio.empty())
      std::printf("final cost over optimum: %.4f\n",
                  result.batches[0].incumbent_ratio.back());
  } else if (!result.batches.empty()) {
    std::fprintf(stderr, "run failed: %s\n", result.batches[0].error.c_str());
  }
  std::printf("results written to %s\n", out_dir.c_str());
  return (!result.batches.empty() && result.batches[0].failed) ? 1 : 0;
}

int cmd_ground_truth(const std::string& config_path, int grid,
                     const std::string& out_dir, int workers) {
  gbo::BenchConfig cfg = load_or_default(config_path);
  if (grid > 0) cfg.ground_truth_grid = grid;
  cfg.validate();
  const gbo::GroundTruth truth =
      obtain_ground_truth(cfg, out_dir, effective_workers(workers));
  print_nominal(gbo::nominal_references(cfg.plant, cfg.tuner, truth));
  if (!out_dir.empty()) {
    gbo::save_ground_truth_cache(out_dir, cfg, truth);
    std::printf("cache written to %s/ground_truth.json\n", out_dir.c_str());
  }
  return 0;
}

int run_bench_once(const gbo::BenchConfig& cfg, const std::string& dir,
                   int workers) {
  const gbo::GroundTruth truth = obtain_ground_truth(cfg, dir, workers);
  const gbo::BenchResult result = gbo::run_monte_carlo(cfg, workers, truth);
  gbo::emit_results(result, cfg, dir);
  print_nominal(result.nominal);
  print_summaries(result.summaries);
  if (result.failed_count > 0)
    std::fprintf(stderr, "%d batch(es) failed; see manifest.json\n",
                 result.failed_count);
  std::printf("results written to %s\n", dir.c_str());
  return 0;
}

int cmd_bench(const std::string& config_path, std::optional<int> batches,
              const std::vector<std::string>& modes, const std::string& sweep_text,
              const std::string& out_dir, const std::optional<std::uint64_t>& seed,
              int workers) {
  gbo::BenchConfig cfg = load_or_default(config_path);
  apply_seed_overrides(cfg, seed);
  if (batches) cfg.batches = *batches;
  if (!modes.empty()) cfg.modes = modes;
  if (!sweep_text.empty()) cfg.sweep = parse_sweep(sweep_text);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.validate();
  const int nw = effective_workers(workers);

  if (!cfg.sweep) return run_bench_once(cfg, cfg.output_dir, nw);

  // one result set per swept value, in sibling directories
  const gbo::SweepSpec sweep = *cfg.sweep;
  gbo::json dirs = gbo::json::array();
  for (double v : sweep.values) {
    gbo::BenchConfig point = cfg;
    point.sweep.reset();
    gbo::apply_sweep(point.tuner, sweep.name, v);
    const std::string sub = sweep.name + "=" + gbo::json(v).dump();
    const std::string dir = cfg.output_dir + "/" + sub;
    point.output_dir = dir;
    std::printf("--- %s ---\n", sub.c_str());
    const int rc = run_bench_once(point, dir, nw);
    if (rc != 0) return rc;
    dirs.push_back(sub);
  }
  const gbo::json top = {{"version", gbo::kVersion},
                         {"generated_at", gbo::iso_timestamp_now()},
                         {"sweep",
                          {{"name", sweep.name},
                           {"values", sweep.values},
                           {"dirs", dirs}}},
                         {"config", gbo::to_json(cfg)}};
  std::ofstream out(cfg.output_dir + "/manifest.json");
  if (!out) throw std::runtime_error("cannot write " + cfg.output_dir + "/manifest.json");
  out << top.dump(2) << "\n";
  std::printf("sweep index written to %s/manifest.json\n", cfg.output_dir.c_str());
  return 0;
}

int report_one(const std::string& dir) {
  const gbo::EmittedRun run = gbo::load_results(dir);
  std::printf("%s: %s, %d batch(es), %d failed\n", dir.c_str(),
              run.manifest.at("generated_at").get<std::string>().c_str(),
              run.manifest.at("batch_count").get<int>(),
              run.manifest.at("failed_count").get<int>());
  std::printf("ground truth: kp=%.6f ki=%.6f J=%.6f\n", run.ground_truth.theta.kp,
              run.ground_truth.theta.ki, run.ground_truth.cost);
  print_summaries(gbo::recompute_summaries(run));
  const gbo::VerifyOutcome v = gbo::verify_emitted_summaries(dir);
  if (v.ok) {
    std::printf("summary files verified against raw iterations\n");
    return 0;
  }
  for (const auto& name : v.mismatched)
    std::fprintf(stderr, "MISMATCH: %s does not match its raw data\n",
                 name.c_str());
  return 1;
}

int cmd_report(const std::string& dir) {
  gbo::json manifest;
  {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw std::runtime_error("cannot open " + dir + "/manifest.json");
    in >> manifest;
  }
  if (!manifest.contains("sweep")) return report_one(dir);
  int rc = 0;
  for (const auto& sub : manifest.at("sweep").at("dirs")) {
    rc |= report_one(dir + "/" + sub.get<std::string>());
    std::printf("\n");
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "PI controller tuning by Bayesian optimization with a continuously "
      "re-identified simulation twin"};
  app.set_version_flag("--version", std::string("gbo ") + gbo::kVersion);
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  int workers = 0;  // 0 means one per hardware thread

  auto* tune = app.add_subcommand("tune", "Run one tuning session");
  std::string tune_mode = "guided";
  std::string tune_out;
  tune->add_option("--mode", tune_mode, "bo, guided, forced, or nominal")
      ->check(CLI::IsMember({"bo", "guided", "forced", "nominal"}));
  tune->add_option("--config", config_path, "JSON config file");
  tune->add_option("--seed", seed, "master RNG seed");
  tune->add_option("-o,--out", tune_out,
                   "emit full results (with ground truth) to this directory");
  tune->add_option("--workers", workers, "threads for the ground-truth search");

  auto* gt = app.add_subcommand("ground-truth",
                                "Noise-free lattice search for the optimum");
  int gt_grid = 0;
  std::string gt_out;
  gt->add_option("--grid", gt_grid, "lattice points per dimension");
  gt->add_option("--config", config_path, "JSON config file");
  gt->add_option("-o,--out", gt_out, "directory for the cache file");
  gt->add_option("--workers", workers, "threads for the search");

  auto* bench = app.add_subcommand("bench", "Monte Carlo comparison of modes");
  std::optional<int> bench_batches;
  std::vector<std::string> bench_modes;
  std::string bench_sweep;
  std::string bench_out;
  bench->add_option("--config", config_path, "JSON config file");
  bench->add_option("--batches", bench_batches, "independent repetitions per mode");
  bench->add_option("--modes", bench_modes, "subset of bo,guided,forced,nominal")
      ->delimiter(',');
  bench->add_option("--sweep", bench_sweep,
                    "parameter sweep, e.g. eta1=1e-6,2,3,8,20");
  bench->add_option("--out", bench_out, "output directory");
  bench->add_option("--seed", seed, "master RNG seed");
  bench->add_option("--workers", workers, "worker threads");

  auto* report = app.add_subcommand("report", "Re-summarize and verify a result set");
  std::string report_dir;
  report->add_option("dir", report_dir, "directory written by bench or tune")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (tune->parsed())
      return cmd_tune(config_path, tune_mode, seed, tune_out, workers);
    if (gt->parsed()) return cmd_ground_truth(config_path, gt_grid, gt_out, workers);
    if (bench->parsed())
      return cmd_bench(config_path, bench_batches, bench_modes, bench_sweep,
                       bench_out, seed, workers);
    if (report->parsed()) return cmd_report(report_dir);
    std::printf("%s\n", app.help().c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
