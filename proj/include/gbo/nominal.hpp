#pragma once
// Analytic PI tuning from phase and gain margin specifications, used as the
// classical baseline the data-driven tuners are measured against.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gbo/lti.hpp"
#include "gbo/metrics.hpp"

namespace gbo {

// Margin specifications plus the first-order-plus-dead-time approximation of
// the plant the margin formulas assume. The gain margin is a linear ratio.
struct PgmSpec {
  double phase_margin = 0.0;         // radians
  double gain_margin = 0.0;          // linear ratio, > 1
  double fopdt_gain = 1.0;           // approximant DC gain
  double fopdt_time_constant = 0.0;  // seconds
  double dead_time = 0.0;            // seconds
  double high_freq_gain = 1.0;       // numerator gain entering the Kp formula

  void validate() const {
    if (!(phase_margin > 0.0 && phase_margin <= std::numbers::pi / 2.0))
      throw std::invalid_argument("PgmSpec: phase margin outside (0, pi/2]");
    if (!(gain_margin > 1.0))
      throw std::invalid_argument("PgmSpec: gain margin must exceed 1");
    if (!(fopdt_time_constant > 0.0))
      throw std::invalid_argument("PgmSpec: time constant must be positive");
    if (!(dead_time > 0.0))
      throw std::invalid_argument("PgmSpec: dead time must be positive");
    if (high_freq_gain == 0.0)
      throw std::invalid_argument("PgmSpec: high frequency gain must be nonzero");
  }
};

inline double gain_margin_from_db(double db) { return std::pow(10.0, db / 20.0); }

struct PgmResult {
  ControllerParams gains{};
  double omega_p = 0.0;  // approximated phase crossover frequency, rad/s
  // The integral-gain formula can go negative when omega_p * dead_time is
  // large; the result is still returned for inspection.
  bool ki_nonpositive = false;
};

// Closed-form PI gains meeting the requested margins on the first-order
// approximant. Pure formula evaluation; no stability check.
inline PgmResult pgm_tune(const PgmSpec& spec) {
  spec.validate();
  constexpr double pi = std::numbers::pi;
  const double am = spec.gain_margin;
  const double l = spec.dead_time;
  const double tau = spec.fopdt_time_constant;
  const double omega =
      (am * spec.phase_margin + 0.5 * pi * am * (am - 1.0)) /
      ((am * am - 1.0) * l);
  PgmResult out;
  out.omega_p = omega;
  out.gains.kp = omega * tau / (am * spec.high_freq_gain);
  out.gains.ki = 2.0 * omega - 4.0 * omega * omega * l / pi + 1.0 / tau;
  out.ki_nonpositive = !(out.gains.ki > 0.0);
  return out;
}

// Cost of a baseline controller on the plant relative to the known optimum
// cost; 1 means optimal, larger is worse.
inline double nominal_baseline_cost(const ControllerParams& gains,
                                    const ContinuousTransferFunction& plant,
                                    const CostWeights& weights,
                                    const LoopConfig& loop,
                                    double optimum_cost) {
  if (!(optimum_cost > 0.0))
    throw std::invalid_argument(
        "nominal_baseline_cost: optimum cost must be positive");
  return true_cost(plant, gains, weights, loop) / optimum_cost;
}

}  // namespace gbo
