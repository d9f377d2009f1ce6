#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gbo/gp.hpp"
#include "gbo/lti.hpp"

namespace gbo {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

// Expected improvement below the incumbent cost (minimization convention).
inline double expected_improvement(double mean, double variance, double j_best) {
  if (!(variance >= 0.0))
    throw std::invalid_argument("expected_improvement: negative variance");
  if (variance < 1e-12) return 0.0;
  const double sd = std::sqrt(variance);
  const double z = (j_best - mean) / sd;
  return sd * (z * normal_cdf(z) + normal_pdf(z));
}

// Inclusive lattice over the feasible box. Flat indices are kp-major: the kp
// coordinate varies slowest, so index 0 is the (kp_min, ki_min) corner.
struct AcquisitionGrid {
  FeasibleSet feasible{};
  int res_kp = 100;
  int res_ki = 100;

  void validate() const {
    feasible.validate();
    if (res_kp < 2 || res_ki < 2)
      throw std::invalid_argument("grid: resolution must be >= 2 per dimension");
  }

  int total() const { return res_kp * res_ki; }

  Eigen::Vector2d normalized(int flat) const {
    const int i = flat / res_ki;
    const int j = flat % res_ki;
    return {static_cast<double>(i) / (res_kp - 1),
            static_cast<double>(j) / (res_ki - 1)};
  }

  ControllerParams params(int flat) const {
    const Eigen::Vector2d u = normalized(flat);
    return feasible.denormalize(u[0], u[1]);
  }
};

struct QueryProposal {
  ControllerParams theta{};
  Eigen::Vector2d normalized{0.0, 0.0};
  double ei = 0.0;
  double posterior_std = 0.0;
};

// Exhaustive scan of expected improvement over the grid. The model works in
// normalized coordinates; ties keep the lowest flat index.
inline QueryProposal next_query(const GaussianProcess& model,
                                const AcquisitionGrid& grid, double j_best) {
  grid.validate();
  const int m = grid.total();
  Eigen::MatrixXd Q(m, 2);
  for (int f = 0; f < m; ++f) Q.row(f) = grid.normalized(f).transpose();
  const auto [mu, var] = model.predict_batch(Q);
  int best = 0;
  double best_ei = expected_improvement(mu[0], var[0], j_best);
  for (int f = 1; f < m; ++f) {
    const double ei = expected_improvement(mu[f], var[f], j_best);
    if (ei > best_ei) {
      best_ei = ei;
      best = f;
    }
  }
  QueryProposal q;
  q.theta = grid.params(best);
  q.normalized = grid.normalized(best);
  q.ei = best_ei;
  q.posterior_std = std::sqrt(var[best]);
  return q;
}

// Expected-improvement trace of one twin session: the value that triggered
// activation first, then one value per accepted twin query.
struct EiHistory {
  std::vector<double> values;
};

// Stop once the latest n_ei values each fell to at most eta3 times the max of
// the values just before them, or once the prospective iteration index i
// exceeds n_max. The comparison window holds the previous min(n_ei, available)
// values, so the rule cannot trigger before enough history exists.
inline bool twin_should_stop(const EiHistory& history, double eta3, int n_ei,
                             int i, int n_max) {
  if (!(eta3 > 0.0)) throw std::invalid_argument("twin stop: eta3 must be > 0");
  if (n_ei < 1) throw std::invalid_argument("twin stop: n_ei must be >= 1");
  if (i > n_max) return true;
  const auto& v = history.values;
  int streak = 0;
  for (size_t t = v.size(); t >= 2; --t) {
    const size_t lo = (t - 1 >= static_cast<size_t>(n_ei)) ? t - 1 - n_ei : 0;
    double window_max = v[lo];
    for (size_t j = lo + 1; j <= t - 2; ++j) window_max = std::max(window_max, v[j]);
    if (v[t - 1] <= eta3 * window_max)
      ++streak;
    else
      break;
  }
  return streak >= n_ei;
}

}  // namespace gbo
