#pragma once
// Continuous LTI transfer functions with input dead time, zero-order-hold
// discretization, and closed-loop PI step-response simulation.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace gbo {

// PI gains; the controller in the forward path is C(s) = kp + kp*ki/s.
struct ControllerParams {
  double kp = 0.0;
  double ki = 0.0;  // integral rate, 1/s
};

// Box of admissible PI gains. The GP operates on inputs normalized to the
// unit square through this box.
struct FeasibleSet {
  double kp_min = 0.11;
  double kp_max = 1.10;
  double ki_min = 0.87;
  double ki_max = 2.08;

  void validate() const {
    if (!(kp_min < kp_max) || !(ki_min < ki_max))
      throw std::invalid_argument("FeasibleSet: empty box");
  }

  bool contains(const ControllerParams& p) const {
    return p.kp >= kp_min && p.kp <= kp_max && p.ki >= ki_min && p.ki <= ki_max;
  }

  std::array<double, 2> normalize(const ControllerParams& p) const {
    return {(p.kp - kp_min) / (kp_max - kp_min),
            (p.ki - ki_min) / (ki_max - ki_min)};
  }

  ControllerParams denormalize(double x0, double x1) const {
    return {kp_min + x0 * (kp_max - kp_min), ki_min + x1 * (ki_max - ki_min)};
  }
};

// Proper rational transfer function in s plus an input dead time.
// Coefficients are stored in descending powers of s.
struct ContinuousTransferFunction {
  std::vector<double> num;
  std::vector<double> den;
  double dead_time = 0.0;  // seconds

  void validate() const {
    if (den.empty() || den.front() == 0.0)
      throw std::invalid_argument("tf: denominator leading coefficient zero");
    if (num.empty()) throw std::invalid_argument("tf: empty numerator");
    if (num.size() > den.size())
      throw std::invalid_argument("tf: improper (deg num > deg den)");
    if (!(dead_time >= 0.0))
      throw std::invalid_argument("tf: negative dead time");
    for (double c : num)
      if (!std::isfinite(c)) throw std::invalid_argument("tf: nonfinite num");
    for (double c : den)
      if (!std::isfinite(c)) throw std::invalid_argument("tf: nonfinite den");
  }

  // num(0)/den(0); infinite for a pole at the origin.
  double dc_gain() const { return num.back() / den.back(); }
};

// Gain/(s^2 + tau1*s + tau2) with an input delay.
inline ContinuousTransferFunction make_second_order_plant(double gain,
                                                          double tau1,
                                                          double tau2,
                                                          double dead_time) {
  return ContinuousTransferFunction{{gain}, {1.0, tau1, tau2}, dead_time};
}

// ZOH-equivalent discrete filter. b and a are difference-equation
// coefficients in z^-1 with a[0] = 1:
//   y_k = sum_i b[i] x_{k-i} - sum_{i>=1} a[i] y_{k-i},
// applied after delaying the input by delay_samples.
struct DiscreteTransferFunction {
  std::vector<double> b;
  std::vector<double> a;
  int delay_samples = 0;
  double dt = 0.0;

  int order() const { return static_cast<int>(a.size()) - 1; }

  // Direct-form-II-transposed step; state has `order()` entries.
  double step(std::vector<double>& state, double x) const {
    const int n = order();
    if (n == 0) return b[0] * x;
    const double y = b[0] * x + state[0];
    for (int i = 0; i < n - 1; ++i)
      state[i] = state[i + 1] + b[i + 1] * x - a[i + 1] * y;
    state[n - 1] = b[n] * x - a[n] * y;
    return y;
  }

  // Output one sample ahead of the inputs fed so far. Valid for strictly
  // proper filters (b[0] == 0), where the next output is already determined.
  double next_output(const std::vector<double>& state) const {
    return order() > 0 ? state[0] : 0.0;
  }

  // DF2T state holding output y_bar under constant input x_bar.
  std::vector<double> steady_state(double x_bar, double y_bar) const {
    const int n = order();
    std::vector<double> s(static_cast<size_t>(n), 0.0);
    for (int i = n - 1; i >= 0; --i) {
      double acc = (i == n - 1) ? 0.0 : s[i + 1];
      s[i] = acc + b[i + 1] * x_bar - a[i + 1] * y_bar;
    }
    return s;
  }
};

namespace detail {

// Characteristic polynomial of A (monic, descending) and the matrices
// N_1..N_n with adj(zI - A) = N_1 z^{n-1} + ... + N_n  (Faddeev-LeVerrier).
inline void faddeev_leverrier(const Eigen::MatrixXd& A,
                              std::vector<double>& charpoly,
                              std::vector<Eigen::MatrixXd>& adj_terms) {
  const int n = static_cast<int>(A.rows());
  charpoly.assign(static_cast<size_t>(n) + 1, 0.0);
  charpoly[0] = 1.0;
  adj_terms.clear();
  Eigen::MatrixXd N = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    adj_terms.push_back(N);
    Eigen::MatrixXd AN = A * N;
    const double c = -AN.trace() / static_cast<double>(k);
    charpoly[static_cast<size_t>(k)] = c;
    N = AN + c * Eigen::MatrixXd::Identity(n, n);
  }
}

}  // namespace detail

inline DiscreteTransferFunction discretize_zoh(
    const ContinuousTransferFunction& tf, double dt) {
  tf.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("discretize_zoh: dt <= 0");

  const int delay = static_cast<int>(std::llround(tf.dead_time / dt));

  // Normalize so the denominator is monic.
  std::vector<double> den(tf.den);
  std::vector<double> num(tf.num);
  const double lead = den.front();
  for (double& c : den) c /= lead;
  for (double& c : num) c /= lead;

  const int n = static_cast<int>(den.size()) - 1;
  if (n == 0) {
    // Static gain.
    return DiscreteTransferFunction{{num[0]}, {1.0}, delay, dt};
  }

  // Split off direct feedthrough so the remainder is strictly proper.
  double D = 0.0;
  if (num.size() == den.size()) {
    D = num.front();
    for (size_t i = 0; i < num.size(); ++i) num[i] -= D * den[i];
    num.erase(num.begin());
  }
  // Pad numerator to length n (coefficients of s^{n-1}..s^0).
  std::vector<double> c(static_cast<size_t>(n), 0.0);
  for (size_t i = 0; i < num.size(); ++i)
    c[c.size() - num.size() + i] = num[i];

  // Controllable canonical form.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) A(0, j) = -den[static_cast<size_t>(j) + 1];
  for (int i = 1; i < n; ++i) A(i, i - 1) = 1.0;
  Eigen::VectorXd B = Eigen::VectorXd::Zero(n);
  B(0) = 1.0;
  Eigen::RowVectorXd C(n);
  for (int j = 0; j < n; ++j) C(j) = c[static_cast<size_t>(j)];

  // Ad = expm(A dt); Bd = integral of expm(A t) B dt, via the augmented
  // matrix exponential.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
  M.topLeftCorner(n, n) = A * dt;
  M.topRightCorner(n, 1) = B * dt;
  Eigen::MatrixXd E = M.exp();
  Eigen::MatrixXd Ad = E.topLeftCorner(n, n);
  Eigen::VectorXd Bd = E.topRightCorner(n, 1);

  // H(z) = C adj(zI - Ad) Bd / det(zI - Ad) + D.
  std::vector<double> az;
  std::vector<Eigen::MatrixXd> adj;
  detail::faddeev_leverrier(Ad, az, adj);

  std::vector<double> bz(static_cast<size_t>(n) + 1, 0.0);
  for (int k = 0; k < n; ++k)
    bz[static_cast<size_t>(k) + 1] = (C * adj[static_cast<size_t>(k)] * Bd)(0);
  for (int k = 0; k <= n; ++k) bz[static_cast<size_t>(k)] += D * az[static_cast<size_t>(k)];

  for (double v : bz)
    if (!std::isfinite(v)) throw std::runtime_error("discretize_zoh: nonfinite result");
  for (double v : az)
    if (!std::isfinite(v)) throw std::runtime_error("discretize_zoh: nonfinite result");

  return DiscreteTransferFunction{bz, az, delay, dt};
}

// Simulation setup for one step-response experiment.
struct LoopConfig {
  double sim_step = 1e-3;    // internal integration step, seconds
  double horizon = 5.0;      // final time T, seconds
  double r_low = 245.0;      // r1, pre-step reference
  double r_high = 306.0;     // r2, post-step reference
  double noise_std = 0.03;   // measurement-noise sigma on retained samples
  int trace_length = 100;    // samples retained per experiment
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(sim_step > 0.0)) throw std::invalid_argument("LoopConfig: sim_step <= 0");
    if (!(horizon > sim_step)) throw std::invalid_argument("LoopConfig: horizon too small");
    if (trace_length < 2) throw std::invalid_argument("LoopConfig: trace_length < 2");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("LoopConfig: noise_std < 0");
    if (!(r_high > r_low)) throw std::invalid_argument("LoopConfig: r_high <= r_low");
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> reference;
  std::vector<double> control;       // u at sample instants (held value)
  std::vector<double> output;        // y with measurement noise
  std::vector<double> output_clean;  // y noise-free
  bool diverged = false;
};

// Closed loop: e = r - y (controller sees the clean output), u = kp*e +
// kp*ki*integral(e), plant input is u delayed by the dead time. The loop
// starts at the pre-step steady state y = r_low with the integrator
// preloaded to hold it, and r steps to r_high at t = 0. Noise is added only
// to the retained output samples. Divergence (|y| > 1e6*r_high) flags the
// trajectory instead of throwing.
inline Trajectory simulate_closed_loop(const ContinuousTransferFunction& plant,
                                       const ControllerParams& ctrl,
                                       const LoopConfig& cfg,
                                       std::mt19937_64& noise_rng) {
  plant.validate();
  cfg.validate();
  if (plant.num.size() == plant.den.size())
    throw std::invalid_argument(
        "simulate_closed_loop: plant must be strictly proper");
  if (!std::isfinite(ctrl.kp) || !std::isfinite(ctrl.ki) ||
      ctrl.kp * ctrl.ki == 0.0)
    throw std::invalid_argument("simulate_closed_loop: kp*ki must be nonzero");
  const double dc = plant.dc_gain();
  if (!std::isfinite(dc) || dc == 0.0)
    throw std::invalid_argument("simulate_closed_loop: plant DC gain unusable");

  const DiscreteTransferFunction d = discretize_zoh(plant, cfg.sim_step);
  const double dt = cfg.sim_step;
  const long nsteps = std::llround(cfg.horizon / dt);
  const double cap = 1e6 * std::abs(cfg.r_high);

  // Pre-step equilibrium.
  const double u1 = cfg.r_low / dc;
  double integ = u1 / (ctrl.kp * ctrl.ki);
  std::vector<double> state = d.steady_state(u1, cfg.r_low);
  std::vector<double> delay_buf(static_cast<size_t>(d.delay_samples), u1);
  size_t delay_pos = 0;

  std::vector<double> y_int(static_cast<size_t>(nsteps) + 1, 0.0);
  std::vector<double> u_int(static_cast<size_t>(nsteps) + 1, 0.0);
  bool diverged = false;
  double y_cur = cfg.r_low;
  for (long i = 0; i <= nsteps; ++i) {
    if (diverged) {
      y_int[static_cast<size_t>(i)] = y_int[static_cast<size_t>(i) - 1];
      u_int[static_cast<size_t>(i)] = u_int[static_cast<size_t>(i) - 1];
      continue;
    }
    const double e = cfg.r_high - y_cur;
    const double u = ctrl.kp * e + ctrl.kp * ctrl.ki * integ;
    integ += dt * e;
    y_int[static_cast<size_t>(i)] = y_cur;
    u_int[static_cast<size_t>(i)] = u;

    double v = u;
    if (d.delay_samples > 0) {
      v = delay_buf[delay_pos];
      delay_buf[delay_pos] = u;
      delay_pos = (delay_pos + 1) % delay_buf.size();
    }
    d.step(state, v);
    y_cur = d.next_output(state);
    if (!std::isfinite(y_cur) || std::abs(y_cur) > cap) {
      diverged = true;
      y_cur = std::isfinite(y_cur) ? std::copysign(cap, y_cur) : cap;
    }
  }

  // Uniform subsample over [0, horizon]; y linearly interpolated, u held.
  const int m = cfg.trace_length;
  const double h = cfg.horizon / static_cast<double>(m - 1);
  Trajectory traj;
  traj.diverged = diverged;
  traj.times.resize(static_cast<size_t>(m));
  traj.reference.assign(static_cast<size_t>(m), cfg.r_high);
  traj.control.resize(static_cast<size_t>(m));
  traj.output_clean.resize(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double t = static_cast<double>(j) * h;
    traj.times[static_cast<size_t>(j)] = t;
    double pos = t / dt;
    long k = static_cast<long>(pos);
    if (k >= nsteps) k = nsteps - 1;
    const double frac = pos - static_cast<double>(k);
    traj.output_clean[static_cast<size_t>(j)] =
        (1.0 - frac) * y_int[static_cast<size_t>(k)] +
        frac * y_int[static_cast<size_t>(k) + 1];
    long ku = static_cast<long>(pos + 1e-9);
    if (ku > nsteps) ku = nsteps;
    traj.control[static_cast<size_t>(j)] = u_int[static_cast<size_t>(ku)];
  }
  traj.output = traj.output_clean;
  if (cfg.noise_std > 0.0) {
    std::normal_distribution<double> dist(0.0, cfg.noise_std);
    for (int j = 0; j < m; ++j) traj.output[static_cast<size_t>(j)] += dist(noise_rng);
  }
  return traj;
}

inline Trajectory simulate_closed_loop(const ContinuousTransferFunction& plant,
                                       const ControllerParams& ctrl,
                                       const LoopConfig& cfg) {
  std::mt19937_64 rng(cfg.rng_seed);
  return simulate_closed_loop(plant, ctrl, cfg, rng);
}

}  // namespace gbo
