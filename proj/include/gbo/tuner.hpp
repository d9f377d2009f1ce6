#pragma once
// Sequential PI-gain optimization loops: plain Bayesian optimization against
// the plant, an uncertainty-gated variant that borrows cheap evaluations from
// a continuously re-identified twin model, and a calendar-driven variant used
// for schedule studies.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gbo/acquisition.hpp"
#include "gbo/gp.hpp"
#include "gbo/lti.hpp"
#include "gbo/metrics.hpp"
#include "gbo/twin.hpp"

namespace gbo {

enum class Provenance { kRealPlant, kTwin };

struct TuningEntry {
  ControllerParams theta{};
  double cost = 0.0;
  Provenance provenance = Provenance::kRealPlant;
};

// Ordered pool of evaluated gains feeding the surrogate model. Twin-sourced
// entries are transient: they never survive past the session that added them.
struct TuningDataset {
  std::vector<TuningEntry> entries;

  int real_count() const {
    int n = 0;
    for (const auto& e : entries) n += e.provenance == Provenance::kRealPlant;
    return n;
  }
  int twin_count() const { return static_cast<int>(entries.size()) - real_count(); }

  void evict_twin() {
    std::erase_if(entries,
                  [](const TuningEntry& e) { return e.provenance == Provenance::kTwin; });
  }

  // Lowest-cost entry over everything currently pooled; earliest wins ties.
  const TuningEntry& best() const {
    if (entries.empty()) throw std::logic_error("TuningDataset: best of empty pool");
    const TuningEntry* b = &entries.front();
    for (const auto& e : entries)
      if (e.cost < b->cost) b = &e;
    return *b;
  }
};

// Calendar-driven twin usage: a session of session_length twin evaluations
// runs before every period-th real experiment.
struct ForcedSchedule {
  int period = 1;
  int session_length = 1;
};

struct GuidedBoConfig {
  double eta1 = 3.0;         // posterior-std threshold that opens a twin session
  double eta2 = 0.09;        // twin fit RMSE ceiling; +inf disables the gate
  double eta3 = 0.2;         // EI decay ratio ending a session
  double delta_tilde = 2.0;  // measured-vs-twin cost mismatch that resets traces
  int n_ei = 3;              // consecutive low-EI iterations required to stop
  int n_max = 35;            // sequential real experiments after the initial design
  int n0 = 1;                // initial design size
  double noise_std = 0.03;   // cost noise added to twin estimates
  int grid_resolution = 100;  // acquisition lattice points per dimension
  int twin_order = 2;
  double twin_param_scale = 1.0;  // deliberate model degradation factor
  LoopConfig loop{};
  FeasibleSet feasible{};
  CostWeights weights = default_cost_weights();
  std::uint64_t rng_seed = 0;
  std::optional<ForcedSchedule> forced_schedule;

  void validate() const {
    if (!(eta1 >= 0.0)) throw std::invalid_argument("config: eta1 must be >= 0");
    if (!(eta2 > 0.0)) throw std::invalid_argument("config: eta2 must be > 0");
    if (!(eta3 > 0.0)) throw std::invalid_argument("config: eta3 must be > 0");
    if (!(delta_tilde > 0.0))
      throw std::invalid_argument("config: delta_tilde must be > 0");
    if (n_ei < 1) throw std::invalid_argument("config: n_ei must be >= 1");
    if (n_max < 0) throw std::invalid_argument("config: n_max must be >= 0");
    if (n0 < 1) throw std::invalid_argument("config: n0 must be >= 1");
    if (!(noise_std >= 0.0))
      throw std::invalid_argument("config: noise_std must be >= 0");
    if (grid_resolution < 2)
      throw std::invalid_argument("config: grid_resolution must be >= 2");
    if (twin_order < 2 || twin_order > 5)
      throw std::invalid_argument("config: twin_order must be in [2, 5]");
    if (!(twin_param_scale > 0.0))
      throw std::invalid_argument("config: twin_param_scale must be > 0");
    if (forced_schedule) {
      if (forced_schedule->period < 1 || forced_schedule->session_length < 1)
        throw std::invalid_argument("config: forced schedule fields must be >= 1");
    }
    loop.validate();
    feasible.validate();
    weights.validate();
  }
};

// One evaluated query. Real records carry the running best-measured cost;
// posterior_std is from the proposal that opened the surrounding iteration,
// zero for the initial design.
struct TuningRecord {
  int iteration = 0;  // real-experiment index, 0 during the initial design
  ControllerParams theta{};
  double cost = 0.0;
  Provenance provenance = Provenance::kRealPlant;
  double posterior_std = 0.0;
  bool twin_session = false;
  int session_length = 0;  // 1-based position on twin records, total on real ones
  double incumbent_cost = std::numeric_limits<double>::infinity();
  ControllerParams incumbent_theta{};
};

struct TuningHistory {
  std::vector<TuningRecord> records;

  int real_count() const {
    int n = 0;
    for (const auto& r : records) n += r.provenance == Provenance::kRealPlant;
    return n;
  }
  int twin_count() const { return static_cast<int>(records.size()) - real_count(); }

  double final_incumbent_cost() const {
    return records.empty() ? std::numeric_limits<double>::infinity()
                           : records.back().incumbent_cost;
  }
  ControllerParams final_incumbent_theta() const {
    if (records.empty()) throw std::logic_error("TuningHistory: empty");
    return records.back().incumbent_theta;
  }
};

// A twin session opens only when the model is unsure at the proposal AND the
// twin currently tracks the plant well enough. Both inequalities are strict.
inline bool twin_activation(double posterior_std, double fit_rmse, double eta1,
                            double eta2) {
  return posterior_std > eta1 && fit_rmse < eta2;
}

// One experiment on the system being tuned: the measured cost plus the
// recorded closed-loop trace it came from.
struct ExperimentResult {
  double cost = 0.0;
  Trajectory trajectory{};
};

// Measurement noise is drawn from the rng the loop passes in, so swapping
// tuner variants never perturbs the experiment noise sequence.
using PlantEvaluator =
    std::function<ExperimentResult(const ControllerParams&, std::mt19937_64&)>;

inline PlantEvaluator make_plant_evaluator(ContinuousTransferFunction plant,
                                           LoopConfig loop, CostWeights weights) {
  plant.validate();
  loop.validate();
  weights.validate();
  return [plant = std::move(plant), loop, weights](
             const ControllerParams& theta, std::mt19937_64& rng) {
    ExperimentResult out;
    out.trajectory = simulate_closed_loop(plant, theta, loop, rng);
    out.cost = aggregate_cost(
        compute_step_metrics(out.trajectory, loop.r_low, loop.r_high), weights);
    return out;
  };
}

namespace detail {

// Independent per-purpose RNG streams derived from one master seed:
// 0 initial design, 1 measurement noise, 2 twin cost noise, 3 GP fits.
inline std::mt19937_64 derive_stream(std::uint64_t master, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffull),
                    static_cast<std::uint32_t>(master >> 32), stream};
  return std::mt19937_64(seq);
}

}  // namespace detail

// Space-filling initial design: each dimension is split into n equal strata
// and every stratum holds exactly one point.
inline std::vector<ControllerParams> latin_hypercube(const FeasibleSet& feasible,
                                                     int n, std::mt19937_64& rng) {
  feasible.validate();
  if (n < 1) throw std::invalid_argument("latin_hypercube: n must be >= 1");
  const auto unit = detail::latin_hypercube(n, 2, 0.0, 1.0, rng);
  std::vector<ControllerParams> pts;
  pts.reserve(static_cast<size_t>(n));
  for (const auto& u : unit) pts.push_back(feasible.denormalize(u[0], u[1]));
  return pts;
}

inline std::vector<ControllerParams> latin_hypercube(const FeasibleSet& feasible,
                                                     int n, std::uint64_t seed) {
  auto rng = detail::derive_stream(seed, 0);
  return latin_hypercube(feasible, n, rng);
}

namespace detail {

enum class TunerMode { kPlain, kGuided, kForced };

class TunerEngine {
 public:
  TunerEngine(const PlantEvaluator& eval, const GuidedBoConfig& cfg, TunerMode mode)
      : eval_(eval),
        cfg_(cfg),
        mode_(mode),
        rng_design_(derive_stream(cfg.rng_seed, 0)),
        rng_meas_(derive_stream(cfg.rng_seed, 1)),
        rng_twin_(derive_stream(cfg.rng_seed, 2)),
        rng_gp_(derive_stream(cfg.rng_seed, 3)),
        grid_{cfg.feasible, cfg.grid_resolution, cfg.grid_resolution},
        gp_(2, make_gp_config(cfg)) {
    cfg_.validate();
    if (mode == TunerMode::kForced && !cfg.forced_schedule)
      throw std::invalid_argument("tuner: forced mode needs forced_schedule");
  }

  TuningHistory run() {
    initial_design();
    for (int m = 1; m <= cfg_.n_max; ++m) iteration(m);
    return std::move(history_);
  }

 private:
  static GpConfig make_gp_config(const GuidedBoConfig& cfg) {
    GpConfig g;
    // Observation noise follows the configured cost noise; the floor keeps
    // the covariance factorizable when duplicate queries meet zero noise.
    g.noise_var = std::max(cfg.noise_std * cfg.noise_std, 1e-8);
    return g;
  }

  void initial_design() {
    const auto pts = latin_hypercube(cfg_.feasible, cfg_.n0, rng_design_);
    for (const auto& theta : pts) measure_real(theta, 0, 0.0, false, 0);
  }

  void iteration(int m) {
    QueryProposal q = fit_and_propose();
    const double opening_std = q.posterior_std;
    bool activated = false;
    int session_len = 0;

    if (mode_ != TunerMode::kPlain) {
      refresh_twin();
      const bool open =
          mode_ == TunerMode::kGuided
              ? twin_activation(q.posterior_std, twin_->fit_rmse, cfg_.eta1,
                                cfg_.eta2)
              : m % cfg_.forced_schedule->period == 0 &&
                    twin_->fit_rmse < cfg_.eta2;
      if (open) {
        activated = true;
        if (mode_ == TunerMode::kGuided) {
          EiHistory ei;
          ei.values.push_back(q.ei);
          while (!twin_should_stop(ei, cfg_.eta3, cfg_.n_ei,
                                   static_cast<int>(ei.values.size()), cfg_.n_max)) {
            q = twin_iteration(q, m, ++session_len);
            ei.values.push_back(q.ei);
          }
        } else {
          const int len = cfg_.forced_schedule->session_length;
          for (int k = 0; k < len; ++k) q = twin_iteration(q, m, ++session_len);
        }
        // Recommend the best cost seen across real and twin evaluations, then
        // drop the twin evaluations before touching the plant.
        q.theta = data_.best().theta;
        data_.evict_twin();
      }
    }

    const ExperimentResult res =
        measure_real(q.theta, m, opening_std, activated, session_len);

    if (mode_ != TunerMode::kPlain) {
      // Twin's own estimate at the measured point, noised like any twin
      // estimate, compared against the measurement; gross mismatch discards
      // all but the newest trace.
      std::optional<double> twin_est;
      if (twin_)
        twin_est = true_cost(twin_->plant, q.theta, cfg_.weights, cfg_.loop) +
                   cfg_.noise_std * gauss_(rng_twin_);
      twin_data_.append(res.trajectory);
      if (twin_est && should_reinitialize(res.cost, *twin_est, cfg_.delta_tilde))
        twin_data_.reinitialize_to_latest();
    }
  }

  QueryProposal fit_and_propose() {
    const auto n = static_cast<Eigen::Index>(data_.entries.size());
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& e = data_.entries[static_cast<size_t>(i)];
      const auto u = cfg_.feasible.normalize(e.theta);
      X(i, 0) = u[0];
      X(i, 1) = u[1];
      y[i] = e.cost;
      best = std::min(best, e.cost);
    }
    gp_.set_data(X, y);
    gp_.fit(rng_gp_);
    return next_query(gp_, grid_, best);
  }

  void refresh_twin() {
    TwinModel model = identify(twin_data_, cfg_.twin_order, cfg_.loop.sim_step);
    if (cfg_.twin_param_scale != 1.0) {
      const double s = cfg_.twin_param_scale;
      for (double& c : model.plant.num) c *= s;
      for (size_t i = 1; i < model.plant.den.size(); ++i) model.plant.den[i] *= s;
      model.plant.dead_time *= s;
      model.fit_rmse = fidelity_rmse(model.plant, twin_data_, cfg_.loop.sim_step);
    }
    twin_ = std::move(model);
  }

  QueryProposal twin_iteration(const QueryProposal& q, int m, int pos) {
    const double cost = true_cost(twin_->plant, q.theta, cfg_.weights, cfg_.loop) +
                        cfg_.noise_std * gauss_(rng_twin_);
    data_.entries.push_back({q.theta, cost, Provenance::kTwin});
    TuningRecord rec;
    rec.iteration = m;
    rec.theta = q.theta;
    rec.cost = cost;
    rec.provenance = Provenance::kTwin;
    rec.posterior_std = q.posterior_std;
    rec.twin_session = true;
    rec.session_length = pos;
    rec.incumbent_cost = incumbent_cost_;
    rec.incumbent_theta = incumbent_theta_;
    history_.records.push_back(rec);
    return fit_and_propose();
  }

  ExperimentResult measure_real(const ControllerParams& theta, int m,
                                double posterior_std, bool activated,
                                int session_len) {
    ExperimentResult res;
    try {
      res = eval_(theta, rng_meas_);
    } catch (const std::exception& e) {
      throw std::runtime_error("tuner: real experiment at iteration " +
                               std::to_string(m) + " failed: " + e.what());
    }
    data_.entries.push_back({theta, res.cost, Provenance::kRealPlant});
    if (res.cost < incumbent_cost_) {
      incumbent_cost_ = res.cost;
      incumbent_theta_ = theta;
    }
    TuningRecord rec;
    rec.iteration = m;
    rec.theta = theta;
    rec.cost = res.cost;
    rec.provenance = Provenance::kRealPlant;
    rec.posterior_std = posterior_std;
    rec.twin_session = activated;
    rec.session_length = session_len;
    rec.incumbent_cost = incumbent_cost_;
    rec.incumbent_theta = incumbent_theta_;
    history_.records.push_back(rec);
    if (mode_ != TunerMode::kPlain && m == 0) twin_data_.append(res.trajectory);
    return res;
  }

  const PlantEvaluator& eval_;
  GuidedBoConfig cfg_;
  TunerMode mode_;
  std::mt19937_64 rng_design_, rng_meas_, rng_twin_, rng_gp_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  AcquisitionGrid grid_;
  GaussianProcess gp_;
  TuningDataset data_;
  TwinDataset twin_data_;
  std::optional<TwinModel> twin_;
  TuningHistory history_;
  double incumbent_cost_ = std::numeric_limits<double>::infinity();
  ControllerParams incumbent_theta_{};
};

}  // namespace detail

// Baseline loop: initial design, then n_max rounds of fit, acquisition
// maximization, and measurement. The twin is never consulted.
inline TuningHistory run_bo(const PlantEvaluator& eval, const GuidedBoConfig& cfg) {
  return detail::TunerEngine(eval, cfg, detail::TunerMode::kPlain).run();
}

// Twin-guided loop: every iteration re-identifies the twin from recorded
// traces; when posterior uncertainty at the proposal is high and twin fit is
// good, a session of cheap twin evaluations refines the surrogate before the
// next real experiment.
inline TuningHistory run_guided_bo(const PlantEvaluator& eval,
                                   const GuidedBoConfig& cfg) {
  return detail::TunerEngine(eval, cfg, detail::TunerMode::kGuided).run();
}

// Schedule-driven variant: sessions run before every period-th real
// experiment with a fixed length, subject only to the twin fitness gate.
inline TuningHistory run_forced_schedule(const PlantEvaluator& eval,
                                         const GuidedBoConfig& cfg) {
  return detail::TunerEngine(eval, cfg, detail::TunerMode::kForced).run();
}

}  // namespace gbo
