#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "gbo/tuner.hpp"

using namespace gbo;

namespace {

const ContinuousTransferFunction kPlant =
    make_second_order_plant(9.544, 4.145, 4.199, 0.002);

GuidedBoConfig small_cfg(std::uint64_t seed, int n0, int n_max) {
  GuidedBoConfig cfg;
  cfg.n0 = n0;
  cfg.n_max = n_max;
  cfg.rng_seed = seed;
  return cfg;
}

// Deterministic convex toy cost; returns no trajectory, so it only suits the
// plain loop which never records traces.
PlantEvaluator bowl_eval() {
  return [](const ControllerParams& t, std::mt19937_64&) {
    ExperimentResult r;
    r.cost = 1.0 + (t.kp - 0.6) * (t.kp - 0.6) + (t.ki - 1.4) * (t.ki - 1.4);
    return r;
  };
}

std::vector<TuningRecord> real_records(const TuningHistory& h) {
  std::vector<TuningRecord> out;
  for (const auto& r : h.records)
    if (r.provenance == Provenance::kRealPlant) out.push_back(r);
  return out;
}

bool same_real_sequence(const TuningHistory& a, const TuningHistory& b) {
  const auto ra = real_records(a);
  const auto rb = real_records(b);
  if (ra.size() != rb.size()) return false;
  for (size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].theta.kp != rb[i].theta.kp) return false;
    if (ra[i].theta.ki != rb[i].theta.ki) return false;
    if (ra[i].cost != rb[i].cost) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("space-filling design puts one point in each stratum", "[tuner]") {
  FeasibleSet box;
  auto rng = detail::derive_stream(42, 0);
  const auto pts = latin_hypercube(box, 5, rng);
  REQUIRE(pts.size() == 5);
  const double wk = (box.kp_max - box.kp_min) / 5.0;  // 0.198 for the default box
  CHECK(std::abs(wk - 0.198) < 1e-12);
  const double wi = (box.ki_max - box.ki_min) / 5.0;
  std::set<int> kp_strata, ki_strata;
  for (const auto& p : pts) {
    CHECK(box.contains(p));
    kp_strata.insert(static_cast<int>((p.kp - box.kp_min) / wk));
    ki_strata.insert(static_cast<int>((p.ki - box.ki_min) / wi));
  }
  CHECK(kp_strata == std::set<int>{0, 1, 2, 3, 4});
  CHECK(ki_strata == std::set<int>{0, 1, 2, 3, 4});

  const auto single = latin_hypercube(box, 1, rng);
  REQUIRE(single.size() == 1);
  CHECK(box.contains(single[0]));
  CHECK_THROWS(latin_hypercube(box, 0, rng));
}

TEST_CASE("pooled design samples are uniform over the box", "[tuner]") {
  // 2000 draws of 10 stratified points per dimension; 40 equal bins. Counts
  // are exactly balanced across strata by construction, so the chi-square
  // statistic has at most 30 effective degrees of freedom; testing against
  // the 39-dof 0.99 quantile is conservative.
  FeasibleSet box;
  auto rng = detail::derive_stream(123, 0);
  std::vector<int> kp_counts(40, 0), ki_counts(40, 0);
  const int draws = 2000, n = 10;
  for (int d = 0; d < draws; ++d) {
    for (const auto& p : latin_hypercube(box, n, rng)) {
      const int bk = std::clamp(
          static_cast<int>((p.kp - box.kp_min) / (box.kp_max - box.kp_min) * 40),
          0, 39);
      const int bi = std::clamp(
          static_cast<int>((p.ki - box.ki_min) / (box.ki_max - box.ki_min) * 40),
          0, 39);
      ++kp_counts[bk];
      ++ki_counts[bi];
    }
  }
  const double expected = static_cast<double>(draws) * n / 40.0;
  auto chi2 = [&](const std::vector<int>& c) {
    double s = 0.0;
    for (int v : c) s += (v - expected) * (v - expected) / expected;
    return s;
  };
  CHECK(chi2(kp_counts) < 62.428);
  CHECK(chi2(ki_counts) < 62.428);
}

TEST_CASE("seeded design matches the loop's initial evaluations", "[tuner]") {
  GuidedBoConfig cfg = small_cfg(11, 3, 0);
  const auto hist = run_bo(bowl_eval(), cfg);
  REQUIRE(hist.records.size() == 3);
  const auto pts = latin_hypercube(cfg.feasible, 3, cfg.rng_seed);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(hist.records[i].theta.kp == pts[i].kp);
    CHECK(hist.records[i].theta.ki == pts[i].ki);
    CHECK(hist.records[i].iteration == 0);
    CHECK(hist.records[i].provenance == Provenance::kRealPlant);
    CHECK(hist.records[i].posterior_std == 0.0);
    CHECK_FALSE(hist.records[i].twin_session);
  }
}

TEST_CASE("plain loop spends its budget exactly and repeats bitwise", "[tuner]") {
  const auto eval = make_plant_evaluator(kPlant, LoopConfig{}, default_cost_weights());
  GuidedBoConfig cfg = small_cfg(5, 2, 3);
  const auto a = run_bo(eval, cfg);
  const auto b = run_bo(eval, cfg);
  CHECK(a.real_count() == 5);
  CHECK(a.twin_count() == 0);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].theta.kp == b.records[i].theta.kp);
    CHECK(a.records[i].theta.ki == b.records[i].theta.ki);
    CHECK(a.records[i].cost == b.records[i].cost);
    CHECK(a.records[i].posterior_std == b.records[i].posterior_std);
  }
  // Iteration records carry the proposal's posterior spread.
  bool any_std = false;
  for (const auto& r : a.records)
    if (r.iteration > 0 && r.posterior_std > 0.0) any_std = true;
  CHECK(any_std);
  // A different seed moves the design.
  const auto c = run_bo(eval, small_cfg(6, 2, 3));
  CHECK_FALSE(same_real_sequence(a, c));
}

TEST_CASE("incumbent tracks the best measured cost and never rises", "[tuner]") {
  GuidedBoConfig cfg = small_cfg(3, 3, 6);
  cfg.noise_std = 0.0;
  const auto hist = run_bo(bowl_eval(), cfg);
  REQUIRE(hist.real_count() == 9);
  double best = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& r : real_records(hist)) {
    CHECK(cfg.feasible.contains(r.theta));
    best = std::min(best, r.cost);
    CHECK(r.incumbent_cost == best);
    CHECK(r.incumbent_cost <= prev);
    prev = r.incumbent_cost;
  }
  CHECK(hist.final_incumbent_cost() == best);
  // The bowl's minimum sits inside the box, so the loop should get close.
  CHECK(hist.final_incumbent_cost() < 1.2);
}

TEST_CASE("guided loop with an unreachable trigger reproduces the plain loop",
          "[tuner]") {
  const auto eval = make_plant_evaluator(kPlant, LoopConfig{}, default_cost_weights());
  for (std::uint64_t seed : {1ull, 2ull}) {
    GuidedBoConfig cfg = small_cfg(seed, 2, 3);
    const auto plain = run_bo(eval, cfg);
    GuidedBoConfig inf_cfg = cfg;
    inf_cfg.eta1 = std::numeric_limits<double>::infinity();
    const auto guided = run_guided_bo(eval, inf_cfg);
    CHECK(guided.twin_count() == 0);
    CHECK(same_real_sequence(plain, guided));
    const auto ra = real_records(plain);
    const auto rb = real_records(guided);
    for (size_t i = 0; i < ra.size(); ++i)
      CHECK(ra[i].posterior_std == rb[i].posterior_std);
  }
}

TEST_CASE("fitness gate alone can veto every session", "[tuner]") {
  // Identification noise floor sits far above an absurdly tight gate, so the
  // trigger condition may hold while the gate never does.
  const auto eval = make_plant_evaluator(kPlant, LoopConfig{}, default_cost_weights());
  GuidedBoConfig cfg = small_cfg(4, 2, 2);
  cfg.eta1 = 0.0;
  cfg.eta2 = 1e-12;
  const auto guided = run_guided_bo(eval, cfg);
  CHECK(guided.twin_count() == 0);
  for (const auto& r : guided.records) CHECK_FALSE(r.twin_session);
  const auto plain = run_bo(eval, small_cfg(4, 2, 2));
  CHECK(same_real_sequence(plain, guided));
}

TEST_CASE("permissive thresholds open a session at every iteration", "[tuner]") {
  const auto eval = make_plant_evaluator(kPlant, LoopConfig{}, default_cost_weights());
  GuidedBoConfig cfg = small_cfg(9, 1, 2);
  cfg.eta1 = 0.0;
  cfg.eta2 = std::numeric_limits<double>::infinity();
  const auto hist = run_guided_bo(eval, cfg);
  CHECK(hist.real_count() == 3);
  CHECK(hist.twin_count() >= 2);
  for (const auto& r : real_records(hist)) {
    if (r.iteration == 0) continue;
    CHECK(r.twin_session);
    CHECK(r.session_length >= 1);
    CHECK(r.session_length <= cfg.n_max);
  }
  // Twin records inside one session number their position from 1.
  int expect = 1;
  int last_iter = 0;
  for (const auto& r : hist.records) {
    if (r.provenance != Provenance::kTwin) continue;
    if (r.iteration != last_iter) {
      last_iter = r.iteration;
      expect = 1;
    }
    CHECK(r.session_length == expect);
    ++expect;
  }
}

TEST_CASE("calendar-driven sessions hit their exact schedule", "[tuner]") {
  const auto eval = make_plant_evaluator(kPlant, LoopConfig{}, default_cost_weights());
  GuidedBoConfig cfg = small_cfg(8, 1, 5);
  cfg.forced_schedule = ForcedSchedule{2, 2};
  cfg.eta2 = std::numeric_limits<double>::infinity();
  const auto hist = run_forced_schedule(eval, cfg);
  CHECK(hist.real_count() == 6);
  CHECK(hist.twin_count() == 4);  // sessions before iterations 2 and 4
  for (const auto& r : real_records(hist)) {
    const bool session_due = r.iteration > 0 && r.iteration % 2 == 0;
    CHECK(r.twin_session == session_due);
    CHECK(r.session_length == (session_due ? 2 : 0));
  }
}

TEST_CASE("schedule period past the budget degenerates to the plain loop",
          "[tuner]") {
  const auto eval = make_plant_evaluator(kPlant, LoopConfig{}, default_cost_weights());
  GuidedBoConfig cfg = small_cfg(12, 2, 3);
  cfg.forced_schedule = ForcedSchedule{7, 3};
  const auto forced = run_forced_schedule(eval, cfg);
  CHECK(forced.twin_count() == 0);
  const auto plain = run_bo(eval, small_cfg(12, 2, 3));
  CHECK(same_real_sequence(plain, forced));

  GuidedBoConfig no_schedule = small_cfg(12, 2, 3);
  CHECK_THROWS(run_forced_schedule(eval, no_schedule));
}

TEST_CASE("evaluation pool bookkeeping", "[tuner]") {
  TuningDataset d;
  d.entries.push_back({{0.5, 1.0}, 3.0, Provenance::kRealPlant});
  d.entries.push_back({{0.6, 1.1}, 2.0, Provenance::kTwin});
  d.entries.push_back({{0.7, 1.2}, 2.0, Provenance::kTwin});
  d.entries.push_back({{0.8, 1.3}, 4.0, Provenance::kRealPlant});
  CHECK(d.real_count() == 2);
  CHECK(d.twin_count() == 2);
  // Ties resolve to the earliest entry.
  CHECK(d.best().theta.kp == 0.6);
  d.evict_twin();
  CHECK(d.real_count() == 2);
  CHECK(d.twin_count() == 0);
  CHECK(d.best().theta.kp == 0.5);
  d.entries.clear();
  CHECK_THROWS(d.best());
}

TEST_CASE("config validation rejects out-of-range fields", "[tuner]") {
  auto expect_throw = [](auto mutate) {
    GuidedBoConfig cfg;
    mutate(cfg);
    CHECK_THROWS(cfg.validate());
  };
  expect_throw([](GuidedBoConfig& c) { c.eta1 = -1.0; });
  expect_throw([](GuidedBoConfig& c) { c.eta2 = 0.0; });
  expect_throw([](GuidedBoConfig& c) { c.eta3 = 0.0; });
  expect_throw([](GuidedBoConfig& c) { c.delta_tilde = 0.0; });
  expect_throw([](GuidedBoConfig& c) { c.n_ei = 0; });
  expect_throw([](GuidedBoConfig& c) { c.n_max = -1; });
  expect_throw([](GuidedBoConfig& c) { c.n0 = 0; });
  expect_throw([](GuidedBoConfig& c) { c.noise_std = -0.1; });
  expect_throw([](GuidedBoConfig& c) { c.grid_resolution = 1; });
  expect_throw([](GuidedBoConfig& c) { c.twin_order = 1; });
  expect_throw([](GuidedBoConfig& c) { c.twin_order = 6; });
  expect_throw([](GuidedBoConfig& c) { c.twin_param_scale = 0.0; });
  expect_throw([](GuidedBoConfig& c) { c.forced_schedule = ForcedSchedule{0, 1}; });
  expect_throw([](GuidedBoConfig& c) { c.forced_schedule = ForcedSchedule{1, 0}; });
  GuidedBoConfig ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("plant evaluator matches the metrics pipeline", "[tuner]") {
  LoopConfig loop;
  const CostWeights w = default_cost_weights();
  const auto eval = make_plant_evaluator(kPlant, loop, w);
  const ControllerParams theta{0.54, 1.16};
  auto r1 = detail::derive_stream(77, 1);
  auto r2 = detail::derive_stream(77, 1);
  const auto a = eval(theta, r1);
  const auto b = eval(theta, r2);
  CHECK(a.cost == b.cost);
  CHECK(a.cost ==
        aggregate_cost(compute_step_metrics(a.trajectory, loop.r_low, loop.r_high), w));
  CHECK(a.trajectory.times.size() == static_cast<size_t>(loop.trace_length));
  // Consecutive calls consume the stream, so the measured cost moves.
  const auto c = eval(theta, r1);
  CHECK(c.cost != a.cost);
}

TEST_CASE("stream derivation is reproducible and purpose-separated", "[tuner]") {
  auto a = detail::derive_stream(99, 2);
  auto b = detail::derive_stream(99, 2);
  auto c = detail::derive_stream(99, 3);
  auto d = detail::derive_stream(100, 2);
  CHECK(a() == b());
  CHECK(a() == b());
  auto a0 = detail::derive_stream(99, 2);
  CHECK(a0() != c());
  CHECK(detail::derive_stream(99, 2)() != d());
}
