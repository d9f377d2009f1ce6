#pragma once
// Step-response performance indicators and their weighted aggregation into
// the scalar tuning cost.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gbo/lti.hpp"

namespace gbo {

struct StepMetrics {
  double overshoot_pct = 0.0;  // percent
  double settling_time = 0.0;  // seconds
  double rise_time = 0.0;      // seconds
  double itae = 0.0;           // output units * s^2
  bool diverged = false;
};

struct CostWeights {
  double w1 = 0.0, w2 = 0.0, w3 = 0.0, w4 = 0.0;

  void validate() const {
    if (!(w1 > 0.0 && w2 > 0.0 && w3 > 0.0 && w4 > 0.0))
      throw std::invalid_argument("CostWeights: weights must be positive");
    if (std::abs(w1 + w2 + w3 + w4 - 1.0) > 1e-12)
      throw std::invalid_argument("CostWeights: weights must sum to 1");
  }

  // Scales arbitrary positive weights to sum exactly 1.
  static CostWeights normalized(double a, double b, double c, double d) {
    const double s = a + b + c + d;
    if (!(s > 0.0)) throw std::invalid_argument("CostWeights: nonpositive sum");
    return CostWeights{a / s, b / s, c / s, d / s};
  }
};

namespace detail {

inline void require_step(const Trajectory& traj, double r_low, double r_high) {
  if (traj.times.empty() || traj.output.size() != traj.times.size())
    throw std::invalid_argument("metrics: malformed trajectory");
  if (!(r_high - r_low > 0.0))
    throw std::invalid_argument("metrics: step height must be positive");
}

// Saturation caps for diverged runs: strongly repellent but finite.
inline constexpr double kOvershootCap = 1000.0;

}  // namespace detail

// 100 * max(0, (y_max - y(T)) / dr) on the noisy channel.
inline double overshoot_pct(const Trajectory& traj, double r_low, double r_high) {
  detail::require_step(traj, r_low, r_high);
  if (traj.diverged) return detail::kOvershootCap;
  const double dr = r_high - r_low;
  const double y_end = traj.output.back();
  const double y_max = *std::max_element(traj.output.begin(), traj.output.end());
  return 100.0 * std::max(0.0, (y_max - y_end) / dr);
}

// Earliest sample time after which every sample stays within 2% of the step
// height around r_high; the horizon when the band is never held.
inline double settling_time(const Trajectory& traj, double r_low, double r_high) {
  detail::require_step(traj, r_low, r_high);
  const double horizon = traj.times.back();
  if (traj.diverged) return horizon;
  const double band = 0.02 * (r_high - r_low);
  size_t first_ok = traj.times.size();  // index from which all samples settle
  for (size_t i = traj.times.size(); i-- > 0;) {
    if (std::abs(traj.output[i] - r_high) <= band)
      first_ok = i;
    else
      break;
  }
  if (first_ok == traj.times.size()) return horizon;
  return traj.times[first_ok];
}

// t60 - t10, with the two threshold crossings located by linear
// interpolation; the horizon when a threshold is never reached.
inline double rise_time(const Trajectory& traj, double r_low, double r_high) {
  detail::require_step(traj, r_low, r_high);
  const double horizon = traj.times.back();
  if (traj.diverged) return horizon;
  const double dr = r_high - r_low;
  auto first_crossing = [&](double level) -> double {
    if (traj.output.front() >= level) return traj.times.front();
    for (size_t i = 1; i < traj.output.size(); ++i) {
      if (traj.output[i] >= level) {
        const double y0 = traj.output[i - 1], y1 = traj.output[i];
        const double t0 = traj.times[i - 1], t1 = traj.times[i];
        const double f = (level - y0) / (y1 - y0);
        return t0 + f * (t1 - t0);
      }
    }
    return -1.0;
  };
  const double t10 = first_crossing(r_low + 0.10 * dr);
  const double t60 = first_crossing(r_low + 0.60 * dr);
  if (t10 < 0.0 || t60 < 0.0) return horizon;
  return t60 - t10;
}

// Trapezoidal integral of t * |y(t) - r_high| over the retained samples.
inline double itae(const Trajectory& traj, double r_high) {
  if (traj.times.size() < 2 || traj.output.size() != traj.times.size())
    throw std::invalid_argument("metrics: malformed trajectory");
  if (traj.diverged) {
    // Cap at horizon^2 * dr, using the first clean sample as the pre-step level.
    const double horizon = traj.times.back();
    const double dr = std::max(r_high - traj.output_clean.front(), 1.0);
    return horizon * horizon * dr;
  }
  double acc = 0.0;
  for (size_t i = 1; i < traj.times.size(); ++i) {
    const double f0 = traj.times[i - 1] * std::abs(traj.output[i - 1] - r_high);
    const double f1 = traj.times[i] * std::abs(traj.output[i] - r_high);
    acc += 0.5 * (f0 + f1) * (traj.times[i] - traj.times[i - 1]);
  }
  return acc;
}

inline StepMetrics compute_step_metrics(const Trajectory& traj, double r_low,
                                        double r_high) {
  StepMetrics m;
  m.overshoot_pct = overshoot_pct(traj, r_low, r_high);
  m.settling_time = settling_time(traj, r_low, r_high);
  m.rise_time = rise_time(traj, r_low, r_high);
  m.itae = itae(traj, r_high);
  m.diverged = traj.diverged;
  return m;
}

// J = w1*overshoot + w2*settling + w3*rise + w4*itae. Diverged runs arrive
// here already saturated by the metric functions.
inline double aggregate_cost(const StepMetrics& m, const CostWeights& w) {
  w.validate();
  return w.w1 * m.overshoot_pct + w.w2 * m.settling_time + w.w3 * m.rise_time +
         w.w4 * m.itae;
}

// Shipped default weight profile for the study plant.
inline CostWeights default_cost_weights() {
  return CostWeights::normalized(0.44, 0.22, 0.22, 0.11);
}

// Noise-free closed-loop cost of one controller; the deterministic quantity
// the tuner's noisy measurements estimate.
inline double true_cost(const ContinuousTransferFunction& plant,
                        const ControllerParams& theta, const CostWeights& weights,
                        const LoopConfig& loop = LoopConfig{}) {
  LoopConfig cfg = loop;
  cfg.noise_std = 0.0;
  const Trajectory traj = simulate_closed_loop(plant, theta, cfg);
  return aggregate_cost(compute_step_metrics(traj, cfg.r_low, cfg.r_high), weights);
}

// Inverse-mean normalization scaled by relative importance, renormalized to
// sum 1. Pure helper behind calibrate_weights.
inline CostWeights calibrate_weights_from_means(
    const std::array<double, 4>& means, const std::array<double, 4>& importance) {
  std::array<double, 4> raw{};
  for (size_t i = 0; i < 4; ++i) {
    const double mu = std::max(means[i], 1e-12);
    if (!(importance[i] > 0.0))
      throw std::invalid_argument("calibrate_weights: importance must be positive");
    raw[i] = importance[i] / mu;
  }
  return CostWeights::normalized(raw[0], raw[1], raw[2], raw[3]);
}

// Default relative-importance profile, chosen so the calibration procedure
// reproduces the published weight profile on the study plant.
inline constexpr std::array<double, 4> kDefaultMetricImportance{27.0, 3.5, 1.0, 50.0};

// Probes the plant noise-free at n_probes gains evenly spanning the feasible
// box diagonal, averages each metric, and converts inverse means plus the
// importance profile into cost weights.
inline CostWeights calibrate_weights(
    const ContinuousTransferFunction& plant, const FeasibleSet& feasible,
    int n_probes,
    const std::array<double, 4>& importance = kDefaultMetricImportance,
    const LoopConfig& loop = LoopConfig{}) {
  feasible.validate();
  if (n_probes < 2) throw std::invalid_argument("calibrate_weights: n_probes < 2");
  LoopConfig cfg = loop;
  cfg.noise_std = 0.0;
  std::array<double, 4> sums{0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < n_probes; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n_probes - 1);
    const ControllerParams theta = feasible.denormalize(f, f);
    const Trajectory traj = simulate_closed_loop(plant, theta, cfg);
    const StepMetrics m = compute_step_metrics(traj, cfg.r_low, cfg.r_high);
    sums[0] += m.overshoot_pct;
    sums[1] += m.settling_time;
    sums[2] += m.rise_time;
    sums[3] += m.itae;
  }
  std::array<double, 4> means{};
  for (size_t i = 0; i < 4; ++i) means[i] = sums[i] / static_cast<double>(n_probes);
  return calibrate_weights_from_means(means, importance);
}

}  // namespace gbo
