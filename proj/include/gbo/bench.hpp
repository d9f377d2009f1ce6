#pragma once
// Benchmark harness computations: noise-free ground-truth grid search,
// Monte Carlo batches of the tuning loops with shared initial designs,
// reference baseline controllers, and per-mode summary statistics.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gbo/acquisition.hpp"
#include "gbo/metrics.hpp"
#include "gbo/tuner.hpp"

namespace gbo {

struct GroundTruth {
  ControllerParams theta{};
  double cost = 0.0;
};

namespace detail {

// Deterministic chunked parallel map: results land by index, so worker count
// never changes the outcome. Worker exceptions are rethrown on the caller.
inline void parallel_for(int total, int workers,
                         const std::function<void(int)>& body, int chunk = 1) {
  const int nw = std::clamp(workers, 1, std::max(total, 1));
  if (nw == 1) {
    for (int i = 0; i < total; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> bad{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    try {
      for (int base = next.fetch_add(chunk); base < total;
           base = next.fetch_add(chunk)) {
        if (bad.load()) return;
        const int end = std::min(base + chunk, total);
        for (int i = base; i < end; ++i) body(i);
      }
    } catch (...) {
      std::scoped_lock lock(error_mu);
      if (!error) error = std::current_exception();
      bad.store(true);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nw) - 1);
  for (int w = 1; w < nw; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Exhaustive argmin of a cost over the inclusive lattice; ties keep the
// lowest flat index (kp-major, matching the acquisition grid).
inline GroundTruth grid_argmin(
    const FeasibleSet& feasible, int grid,
    const std::function<double(const ControllerParams&)>& cost, int workers = 1) {
  if (grid < 10) throw std::invalid_argument("grid_argmin: grid must be >= 10");
  AcquisitionGrid lattice{feasible, grid, grid};
  lattice.validate();
  const int total = lattice.total();
  std::vector<double> values(static_cast<size_t>(total));
  detail::parallel_for(
      total, workers,
      [&](int f) { values[static_cast<size_t>(f)] = cost(lattice.params(f)); }, 16);
  int best = 0;
  for (int f = 1; f < total; ++f)
    if (values[static_cast<size_t>(f)] < values[static_cast<size_t>(best)]) best = f;
  return {lattice.params(best), values[static_cast<size_t>(best)]};
}

// Noise-free closed-loop cost minimized over the lattice.
inline GroundTruth ground_truth_search(const ContinuousTransferFunction& plant,
                                       const GuidedBoConfig& cfg, int grid,
                                       int workers = 1) {
  plant.validate();
  cfg.validate();
  return grid_argmin(
      cfg.feasible, grid,
      [&](const ControllerParams& t) {
        return true_cost(plant, t, cfg.weights, cfg.loop);
      },
      workers);
}

// Classically tuned baseline gain sets shipped for the study plant.
inline constexpr std::array<ControllerParams, 2> kBaselineControllers{
    {{0.85, 1.07}, {0.86, 0.89}}};

struct NominalReference {
  ControllerParams gains{};
  double cost = 0.0;
  double ratio = 0.0;  // cost over the ground-truth optimum
};

inline std::vector<NominalReference> nominal_references(
    const ContinuousTransferFunction& plant, const GuidedBoConfig& cfg,
    const GroundTruth& truth) {
  if (!(truth.cost > 0.0))
    throw std::invalid_argument("nominal_references: ground truth cost not positive");
  std::vector<NominalReference> out;
  for (const auto& g : kBaselineControllers) {
    const double c = true_cost(plant, g, cfg.weights, cfg.loop);
    out.push_back({g, c, c / truth.cost});
  }
  return out;
}

struct SweepSpec {
  std::string name;
  std::vector<double> values;
};

struct BenchConfig {
  GuidedBoConfig tuner{};
  ContinuousTransferFunction plant =
      make_second_order_plant(9.544, 4.145, 4.199, 0.002);
  int batches = 20;
  std::vector<std::string> modes{"bo", "guided"};
  int ground_truth_grid = 100;
  std::optional<SweepSpec> sweep;
  std::string output_dir = "bench-out";

  void validate() const {
    tuner.validate();
    plant.validate();
    if (batches < 1) throw std::invalid_argument("bench: batches must be >= 1");
    if (ground_truth_grid < 10)
      throw std::invalid_argument("bench: ground_truth_grid must be >= 10");
    if (modes.empty()) throw std::invalid_argument("bench: modes must not be empty");
    for (const auto& m : modes) {
      if (m != "bo" && m != "guided" && m != "forced" && m != "nominal")
        throw std::invalid_argument("bench: unknown mode '" + m + "'");
      if (std::count(modes.begin(), modes.end(), m) != 1)
        throw std::invalid_argument("bench: duplicate mode '" + m + "'");
    }
    if (std::count(modes.begin(), modes.end(), "forced") && !tuner.forced_schedule)
      throw std::invalid_argument("bench: forced mode needs tuner.forced_schedule");
    if (sweep && sweep->values.empty())
      throw std::invalid_argument("bench: sweep needs at least one value");
  }
};

// Override one named tuner parameter; used by sensitivity sweeps.
inline void apply_sweep(GuidedBoConfig& cfg, const std::string& name, double value) {
  auto as_int = [&](int lo) {
    const int v = static_cast<int>(std::llround(value));
    if (std::abs(value - v) > 1e-9 || v < lo)
      throw std::invalid_argument("sweep: '" + name + "' needs an integer >= " +
                                  std::to_string(lo));
    return v;
  };
  if (name == "eta1") cfg.eta1 = value;
  else if (name == "eta2") cfg.eta2 = value;
  else if (name == "eta3") cfg.eta3 = value;
  else if (name == "delta_tilde") cfg.delta_tilde = value;
  else if (name == "noise_std") cfg.noise_std = value;
  else if (name == "twin_param_scale") cfg.twin_param_scale = value;
  else if (name == "n_ei") cfg.n_ei = as_int(1);
  else if (name == "n_max") cfg.n_max = as_int(0);
  else if (name == "n0") cfg.n0 = as_int(1);
  else if (name == "grid_resolution") cfg.grid_resolution = as_int(2);
  else if (name == "twin_order") cfg.twin_order = as_int(2);
  else if (name == "forced_period" || name == "forced_session_length") {
    if (!cfg.forced_schedule)
      throw std::invalid_argument("sweep: '" + name +
                                  "' needs forced_schedule in the config");
    if (name == "forced_period") cfg.forced_schedule->period = as_int(1);
    else cfg.forced_schedule->session_length = as_int(1);
  } else {
    throw std::invalid_argument("sweep: unknown parameter '" + name + "'");
  }
}

struct BatchResult {
  std::string mode;
  int batch_index = 0;
  std::uint64_t seed = 0;
  TuningHistory history;
  std::vector<double> incumbent_ratio;  // per real evaluation, in order
  int twin_activation_count = 0;
  bool failed = false;
  std::string error;
};

// One batch of one mode. Batch seeds are master + index, so every mode of a
// batch shares the same initial design and measurement noise sequence.
inline BatchResult run_batch(const BenchConfig& cfg, const std::string& mode,
                             int batch_index, const GroundTruth& truth) {
  BatchResult out;
  out.mode = mode;
  out.batch_index = batch_index;
  out.seed = cfg.tuner.rng_seed + static_cast<std::uint64_t>(batch_index);
  try {
    if (!(truth.cost > 0.0))
      throw std::invalid_argument("bench: ground truth cost not positive");
    if (mode == "nominal") {
      // Fixed reference controllers evaluated noise-free; deterministic, so
      // a single pseudo-batch stands in for the mode.
      double inc = std::numeric_limits<double>::infinity();
      ControllerParams inc_theta{};
      for (const auto& gains : kBaselineControllers) {
        const double c = true_cost(cfg.plant, gains, cfg.tuner.weights, cfg.tuner.loop);
        if (c < inc) {
          inc = c;
          inc_theta = gains;
        }
        TuningRecord rec;
        rec.theta = gains;
        rec.cost = c;
        rec.incumbent_cost = inc;
        rec.incumbent_theta = inc_theta;
        out.history.records.push_back(rec);
        out.incumbent_ratio.push_back(inc / truth.cost);
      }
      return out;
    }
    GuidedBoConfig run_cfg = cfg.tuner;
    run_cfg.rng_seed = out.seed;
    const auto eval = make_plant_evaluator(cfg.plant, run_cfg.loop, run_cfg.weights);
    if (mode == "bo") out.history = run_bo(eval, run_cfg);
    else if (mode == "guided") out.history = run_guided_bo(eval, run_cfg);
    else if (mode == "forced") out.history = run_forced_schedule(eval, run_cfg);
    else throw std::invalid_argument("bench: unknown mode '" + mode + "'");
    for (const auto& r : out.history.records) {
      if (r.provenance != Provenance::kRealPlant) continue;
      out.incumbent_ratio.push_back(r.incumbent_cost / truth.cost);
      out.twin_activation_count += r.twin_session ? 1 : 0;
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
    out.history.records.clear();
    out.incumbent_ratio.clear();
    out.twin_activation_count = 0;
  }
  return out;
}

// Cost-ratio levels whose first-crossing iteration the summary reports.
inline constexpr std::array<double, 3> kRatioThresholds{1.71, 1.49, 1.05};

struct ConvergenceBandRow {
  int evaluation = 0;  // 1-based count of real experiments so far
  int count = 0;       // batches contributing to this row
  double mean = 0.0;
  double lo68 = 0.0, hi68 = 0.0;
  double lo90 = 0.0, hi90 = 0.0;
  double lo95 = 0.0, hi95 = 0.0;
  double lo99 = 0.0, hi99 = 0.0;
};

struct ThresholdStat {
  double threshold = 0.0;
  int reached = 0;  // batches whose incumbent ratio ever dipped to it
  double mean_evaluations = std::numeric_limits<double>::quiet_NaN();
};

struct ModeSummary {
  std::string mode;
  int batches = 0;
  int failed = 0;
  double final_ratio_mean = std::numeric_limits<double>::quiet_NaN();
  double final_ratio_median = std::numeric_limits<double>::quiet_NaN();
  double mean_activations = 0.0;
  std::vector<ConvergenceBandRow> bands;
  std::array<ThresholdStat, kRatioThresholds.size()> thresholds{};
  // Measured-cost ratios: 16 bins of width 0.25 over [1, 5) plus overflow;
  // sub-1 values (possible under noise) land in the first bin.
  std::array<int, 17> histogram{};
};

namespace detail {

// Linear-interpolated percentile of an already sorted sample.
inline double sorted_percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline int ratio_bin(double ratio) {
  if (ratio >= 5.0) return 16;
  return std::clamp(static_cast<int>((ratio - 1.0) / 0.25), 0, 15);
}

}  // namespace detail

// Aggregate one mode's batches. Failed batches are counted and excluded.
inline ModeSummary summarize_mode(const std::string& mode,
                                  const std::vector<BatchResult>& all,
                                  const GroundTruth& truth) {
  ModeSummary s;
  s.mode = mode;
  for (size_t i = 0; i < kRatioThresholds.size(); ++i)
    s.thresholds[i].threshold = kRatioThresholds[i];
  std::vector<const BatchResult*> ok;
  for (const auto& b : all) {
    if (b.mode != mode) continue;
    ++s.batches;
    if (b.failed) ++s.failed;
    else ok.push_back(&b);
  }
  if (ok.empty()) return s;

  size_t rows = 0;
  for (const auto* b : ok) rows = std::max(rows, b->incumbent_ratio.size());
  for (size_t i = 0; i < rows; ++i) {
    std::vector<double> vals;
    for (const auto* b : ok)
      if (i < b->incumbent_ratio.size()) vals.push_back(b->incumbent_ratio[i]);
    std::sort(vals.begin(), vals.end());
    ConvergenceBandRow row;
    row.evaluation = static_cast<int>(i) + 1;
    row.count = static_cast<int>(vals.size());
    double sum = 0.0;
    for (double v : vals) sum += v;
    row.mean = sum / static_cast<double>(vals.size());
    row.lo68 = detail::sorted_percentile(vals, 0.16);
    row.hi68 = detail::sorted_percentile(vals, 0.84);
    row.lo90 = detail::sorted_percentile(vals, 0.05);
    row.hi90 = detail::sorted_percentile(vals, 0.95);
    row.lo95 = detail::sorted_percentile(vals, 0.025);
    row.hi95 = detail::sorted_percentile(vals, 0.975);
    row.lo99 = detail::sorted_percentile(vals, 0.005);
    row.hi99 = detail::sorted_percentile(vals, 0.995);
    s.bands.push_back(row);
  }

  for (size_t k = 0; k < kRatioThresholds.size(); ++k) {
    double sum = 0.0;
    int reached = 0;
    for (const auto* b : ok) {
      for (size_t i = 0; i < b->incumbent_ratio.size(); ++i) {
        if (b->incumbent_ratio[i] <= kRatioThresholds[k]) {
          sum += static_cast<double>(i) + 1.0;
          ++reached;
          break;
        }
      }
    }
    s.thresholds[k].reached = reached;
    if (reached > 0) s.thresholds[k].mean_evaluations = sum / reached;
  }

  std::vector<double> finals;
  double act_sum = 0.0;
  for (const auto* b : ok) {
    if (!b->incumbent_ratio.empty()) finals.push_back(b->incumbent_ratio.back());
    act_sum += b->twin_activation_count;
    for (const auto& r : b->history.records)
      if (r.provenance == Provenance::kRealPlant)
        ++s.histogram[static_cast<size_t>(detail::ratio_bin(r.cost / truth.cost))];
  }
  s.mean_activations = act_sum / static_cast<double>(ok.size());
  if (!finals.empty()) {
    double sum = 0.0;
    for (double v : finals) sum += v;
    s.final_ratio_mean = sum / static_cast<double>(finals.size());
    std::sort(finals.begin(), finals.end());
    s.final_ratio_median = detail::sorted_percentile(finals, 0.5);
  }
  return s;
}

struct BenchResult {
  GroundTruth ground_truth{};
  std::vector<NominalReference> nominal;
  std::vector<BatchResult> batches;     // mode-major, batch ascending
  std::vector<ModeSummary> summaries;   // one per configured mode, in order
  int failed_count = 0;
};

// Full Monte Carlo run: ground truth (unless supplied), then every (mode,
// batch) task on a worker pool, then per-mode summaries. Batches are
// independent; results are deterministic for a given config and seed
// regardless of worker count.
inline BenchResult run_monte_carlo(const BenchConfig& cfg, int workers = 1,
                                   std::optional<GroundTruth> precomputed = {}) {
  cfg.validate();
  BenchResult out;
  out.ground_truth =
      precomputed ? *precomputed
                  : ground_truth_search(cfg.plant, cfg.tuner,
                                        cfg.ground_truth_grid, workers);
  out.nominal = nominal_references(cfg.plant, cfg.tuner, out.ground_truth);

  struct Task {
    const std::string* mode;
    int batch;
  };
  std::vector<Task> tasks;
  for (const auto& m : cfg.modes) {
    if (m == "nominal") tasks.push_back({&m, 0});
    else
      for (int b = 0; b < cfg.batches; ++b) tasks.push_back({&m, b});
  }
  out.batches.resize(tasks.size());
  detail::parallel_for(static_cast<int>(tasks.size()), workers, [&](int i) {
    const auto& t = tasks[static_cast<size_t>(i)];
    out.batches[static_cast<size_t>(i)] =
        run_batch(cfg, *t.mode, t.batch, out.ground_truth);
  });
  for (const auto& b : out.batches) out.failed_count += b.failed ? 1 : 0;
  for (const auto& m : cfg.modes)
    out.summaries.push_back(summarize_mode(m, out.batches, out.ground_truth));
  return out;
}

}  // namespace gbo
