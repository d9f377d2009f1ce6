#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "gbo/nominal.hpp"

using namespace gbo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PgmSpec unit_spec() {
  PgmSpec s;
  s.phase_margin = std::numbers::pi / 2.0;
  s.gain_margin = 2.0;
  s.fopdt_gain = 1.0;
  s.fopdt_time_constant = 1.0;
  s.dead_time = 1.0;
  s.high_freq_gain = 1.0;
  return s;
}

}  // namespace

TEST_CASE("margin formulas match hand-evaluated closed forms", "[nominal]") {
  // A_m = 2, phi_m = pi/2, l = tau = L = 1:
  //   omega_p = (2 * pi/2 + pi/2 * 2 * 1) / (3 * 1) = 2 pi / 3
  //   Kp      = omega_p / 2 = pi / 3
  //   Ki      = 2 omega_p - 4 omega_p^2 / pi + 1 = 1 - 4 pi / 9
  const PgmResult r = pgm_tune(unit_spec());
  const double pi = std::numbers::pi;
  CHECK_THAT(r.omega_p, WithinAbs(2.0 * pi / 3.0, 1e-12));
  CHECK_THAT(r.gains.kp, WithinAbs(pi / 3.0, 1e-12));
  CHECK_THAT(r.gains.ki, WithinAbs(1.0 - 4.0 * pi / 9.0, 1e-12));
  // This corner of the formula family yields a negative integral gain and
  // must be reported, not silently clipped.
  CHECK(r.gains.ki < 0.0);
  CHECK(r.ki_nonpositive);
}

TEST_CASE("high frequency gain scales only the proportional term", "[nominal]") {
  PgmSpec a = unit_spec();
  a.phase_margin = 1.0;
  a.dead_time = 0.3;
  a.fopdt_time_constant = 1.4;
  PgmSpec b = a;
  b.high_freq_gain = 2.0 * a.high_freq_gain;
  const PgmResult ra = pgm_tune(a);
  const PgmResult rb = pgm_tune(b);
  CHECK(ra.omega_p == rb.omega_p);
  CHECK(ra.gains.ki == rb.gains.ki);
  CHECK_THAT(rb.gains.kp, WithinRel(0.5 * ra.gains.kp, 1e-14));
}

TEST_CASE("crossover estimate moves the right way with the margins", "[nominal]") {
  const double am_values[] = {1.5, 2.0, 10.0, gain_margin_from_db(46.0), 199.5};
  for (double am : am_values) {
    // omega_p strictly increasing in the phase margin.
    double prev = -1.0;
    for (double pm = 0.1; pm <= 1.55; pm += 0.1) {
      PgmSpec s = unit_spec();
      s.gain_margin = am;
      s.phase_margin = pm;
      s.dead_time = 0.4;
      const double w = pgm_tune(s).omega_p;
      CHECK(w > prev);
      prev = w;
    }
    // omega_p strictly decreasing in the dead time.
    prev = std::numeric_limits<double>::infinity();
    for (double l = 0.05; l <= 1.0; l += 0.05) {
      PgmSpec s = unit_spec();
      s.gain_margin = am;
      s.phase_margin = 1.0;
      s.dead_time = l;
      const double w = pgm_tune(s).omega_p;
      CHECK(w < prev);
      prev = w;
    }
  }
}

TEST_CASE("tuning is a pure function of the spec", "[nominal]") {
  PgmSpec s = unit_spec();
  s.phase_margin = 1.047;
  s.gain_margin = 3.7;
  s.dead_time = 0.21;
  s.fopdt_time_constant = 1.9;
  s.high_freq_gain = 0.83;
  const PgmResult first = pgm_tune(s);
  for (int i = 0; i < 3; ++i) {
    const PgmResult again = pgm_tune(s);
    CHECK(again.omega_p == first.omega_p);
    CHECK(again.gains.kp == first.gains.kp);
    CHECK(again.gains.ki == first.gains.ki);
    CHECK(again.ki_nonpositive == first.ki_nonpositive);
  }
}

TEST_CASE("spec validation rejects out-of-range margins", "[nominal]") {
  PgmSpec s = unit_spec();
  s.phase_margin = 0.0;
  CHECK_THROWS(pgm_tune(s));
  s = unit_spec();
  s.phase_margin = std::numbers::pi / 2.0 + 1e-6;
  CHECK_THROWS(pgm_tune(s));
  s = unit_spec();
  s.gain_margin = 1.0;
  CHECK_THROWS(pgm_tune(s));
  s = unit_spec();
  s.fopdt_time_constant = 0.0;
  CHECK_THROWS(pgm_tune(s));
  s = unit_spec();
  s.dead_time = -0.1;
  CHECK_THROWS(pgm_tune(s));
  s = unit_spec();
  s.high_freq_gain = 0.0;
  CHECK_THROWS(pgm_tune(s));
}

TEST_CASE("decibel conversion of the gain margin", "[nominal]") {
  CHECK_THAT(gain_margin_from_db(0.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(gain_margin_from_db(20.0), WithinAbs(10.0, 1e-12));
  CHECK_THAT(gain_margin_from_db(46.0), WithinRel(std::pow(10.0, 2.3), 1e-14));
}

TEST_CASE("baseline cost ratio is 1 at the reference controller", "[nominal]") {
  const ContinuousTransferFunction plant =
      make_second_order_plant(9.544, 4.145, 4.199, 0.002);
  const CostWeights w = default_cost_weights();
  LoopConfig cfg;
  const ControllerParams theta{0.5295, 1.1571};
  const double j = true_cost(plant, theta, w, cfg);
  REQUIRE(j > 0.0);
  CHECK(nominal_baseline_cost(theta, plant, w, cfg, j) == 1.0);
  CHECK_THROWS(nominal_baseline_cost(theta, plant, w, cfg, 0.0));
  CHECK_THROWS(nominal_baseline_cost(theta, plant, w, cfg, -1.0));
}

TEST_CASE("noise-free cost ignores the configured sensor noise", "[nominal]") {
  const ContinuousTransferFunction plant =
      make_second_order_plant(9.544, 4.145, 4.199, 0.002);
  const CostWeights w = default_cost_weights();
  const ControllerParams theta{0.54, 1.16};
  LoopConfig noisy;
  noisy.noise_std = 0.5;
  noisy.rng_seed = 99;
  LoopConfig quiet;
  quiet.noise_std = 0.0;
  CHECK(true_cost(plant, theta, w, noisy) == true_cost(plant, theta, w, quiet));
}

TEST_CASE("margin-designed gains land near but above the optimum cost", "[nominal]") {
  const ContinuousTransferFunction plant =
      make_second_order_plant(9.544, 4.145, 4.199, 0.002);
  const CostWeights w = default_cost_weights();
  LoopConfig cfg;
  const double opt = true_cost(plant, {0.5295, 1.1571}, w, cfg);
  const double ratio = nominal_baseline_cost({0.85, 1.07}, plant, w, cfg, opt);
  CHECK(ratio > 1.2);
  CHECK(ratio < 2.5);
}
