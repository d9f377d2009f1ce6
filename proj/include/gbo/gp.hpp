#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <algorithm>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gbo {

// Hyperparameters are packed in log space: p[0] = log signal variance,
// p[1..dim] = log lengthscale per input dimension. Measurement noise variance
// is fixed, never optimized.
struct GpConfig {
  double noise_var = 9e-4;
  int n_starts = 8;
  double start_lo = -6.0;
  double start_hi = 6.0;
  double box_lo = -12.0;
  double box_hi = 12.0;
  double grad_tol = 1e-6;
  int max_iters = 100;

  void validate() const {
    if (!(noise_var > 0.0)) throw std::invalid_argument("gp: noise_var must be > 0");
    if (n_starts < 1) throw std::invalid_argument("gp: n_starts must be >= 1");
    if (!(start_lo < start_hi) || !(box_lo < box_hi))
      throw std::invalid_argument("gp: empty hyperparameter box");
  }
};

// Matern 5/2 with per-dimension lengthscales.
inline double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& p) {
  const double sf2 = std::exp(p[0]);
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double z = (a[d] - b[d]) / std::exp(p[d + 1]);
    r2 += z * z;
  }
  const double r = std::sqrt(r2);
  const double s5r = std::sqrt(5.0) * r;
  return sf2 * (1.0 + s5r + 5.0 * r2 / 3.0) * std::exp(-s5r);
}

namespace detail {

inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& p) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      K(i, j) = matern52(X.row(i), X.row(j), p);
      K(j, i) = K(i, j);
    }
  return K;
}

// Cholesky of K + noise*I, escalating a relative jitter when the
// factorization loses positive definiteness.
inline bool chol_with_jitter(const Eigen::MatrixXd& K, double noise_var,
                             double sf2, Eigen::LLT<Eigen::MatrixXd>& llt) {
  Eigen::MatrixXd Ky = K;
  Ky.diagonal().array() += noise_var;
  llt.compute(Ky);
  if (llt.info() == Eigen::Success) return true;
  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
    Eigen::MatrixXd Kj = Ky;
    Kj.diagonal().array() += jitter * sf2;
    llt.compute(Kj);
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

}  // namespace detail

// Log marginal likelihood of a zero-mean GP and its gradient with respect to
// the packed log hyperparameters. Returns -inf (and a zero gradient) when the
// covariance cannot be factorized even with jitter.
inline std::pair<double, Eigen::VectorXd> gp_lml_and_grad(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
    const Eigen::VectorXd& p, double noise_var) {
  const Eigen::Index n = X.rows();
  const Eigen::Index dim = X.cols();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim + 1);
  const Eigen::MatrixXd Kf = detail::kernel_matrix(X, p);
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!detail::chol_with_jitter(Kf, noise_var, std::exp(p[0]), llt))
    return {-std::numeric_limits<double>::infinity(), grad};

  const Eigen::VectorXd alpha = llt.solve(y);
  double logdet_half = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet_half += std::log(llt.matrixL()(i, i));
  const double lml = -0.5 * y.dot(alpha) - logdet_half -
                     0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);

  const Eigen::MatrixXd Kinv =
      llt.solve(Eigen::MatrixXd::Identity(n, n));
  // d lml / d theta_j = 0.5 tr((alpha alpha^T - Kinv) dK/dtheta_j)
  auto trace_term = [&](const Eigen::MatrixXd& dK) {
    return 0.5 * (alpha.dot(dK * alpha) - (Kinv.cwiseProduct(dK)).sum());
  };
  grad[0] = trace_term(Kf);
  const double sf2 = std::exp(p[0]);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double ell2 = std::exp(2.0 * p[d + 1]);
    Eigen::MatrixXd dK(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      dK(i, i) = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        double r2 = 0.0;
        for (Eigen::Index dd = 0; dd < dim; ++dd) {
          const double z = (X(i, dd) - X(j, dd)) / std::exp(p[dd + 1]);
          r2 += z * z;
        }
        const double r = std::sqrt(r2);
        const double s5r = std::sqrt(5.0) * r;
        const double delta = X(i, d) - X(j, d);
        dK(i, j) = (5.0 / 3.0) * sf2 * (1.0 + s5r) * std::exp(-s5r) *
                   delta * delta / ell2;
        dK(j, i) = dK(i, j);
      }
    }
    grad[d + 1] = trace_term(dK);
  }
  return {lml, grad};
}

namespace detail {

// BFGS maximization of the LML over the packed log hyperparameters with an
// Armijo backtracking line search and a hard clamp to [box_lo, box_hi].
inline std::pair<Eigen::VectorXd, double> maximize_lml(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::VectorXd p,
    const GpConfig& cfg) {
  const Eigen::Index m = p.size();
  auto clamp = [&](Eigen::VectorXd v) {
    return v.cwiseMax(cfg.box_lo).cwiseMin(cfg.box_hi);
  };
  p = clamp(p);
  auto [f, g] = gp_lml_and_grad(X, y, p, cfg.noise_var);
  if (!std::isfinite(f)) return {p, f};
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m);
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < cfg.grad_tol) break;
    Eigen::VectorXd dir = H * g;
    if (dir.dot(g) <= 0.0) {
      H.setIdentity();
      dir = g;
    }
    double t = 1.0;
    Eigen::VectorXd p_new;
    double f_new = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd g_new;
    bool accepted = false;
    while (t >= 1e-12) {
      p_new = clamp(p + t * dir);
      std::tie(f_new, g_new) = gp_lml_and_grad(X, y, p_new, cfg.noise_var);
      if (std::isfinite(f_new) &&
          f_new >= f + 1e-4 * g.dot(p_new - p)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = p_new - p;
    const Eigen::VectorXd dg = g - g_new;  // gradient of -lml increases
    const double sy = s.dot(dg);
    if (sy > 1e-12 * s.norm() * dg.norm()) {
      const Eigen::VectorXd Hy = H * dg;
      const double yHy = dg.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    p = p_new;
    f = f_new;
    g = g_new;
  }
  return {p, f};
}

// Latin hypercube sample of n points in [lo, hi]^m: each coordinate is
// stratified into n cells and permuted independently.
inline std::vector<Eigen::VectorXd> latin_hypercube(int n, Eigen::Index m,
                                                    double lo, double hi,
                                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<int>> perms(m);
  for (Eigen::Index d = 0; d < m; ++d) {
    perms[d].resize(n);
    for (int i = 0; i < n; ++i) perms[d][i] = i;
    std::shuffle(perms[d].begin(), perms[d].end(), rng);
  }
  std::vector<Eigen::VectorXd> pts(n, Eigen::VectorXd(m));
  for (int i = 0; i < n; ++i)
    for (Eigen::Index d = 0; d < m; ++d) {
      const double u = (perms[d][i] + unif(rng)) / n;
      pts[i][d] = lo + (hi - lo) * u;
    }
  return pts;
}

}  // namespace detail

// Zero-mean GP regressor on raw observations with fixed measurement noise.
// Hyperparameters are refit from scratch on every fit() call.
class GaussianProcess {
 public:
  explicit GaussianProcess(int dim, GpConfig cfg = GpConfig{})
      : dim_(dim), cfg_(cfg) {
    cfg_.validate();
    if (dim < 1) throw std::invalid_argument("gp: dim must be >= 1");
    hypers_ = Eigen::VectorXd::Zero(dim + 1);
  }

  void set_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.cols() != dim_ || X.rows() != y.size())
      throw std::invalid_argument("gp: data shape mismatch");
    X_ = X;
    y_ = y;
    factorized_ = false;
  }

  Eigen::Index size() const { return X_.rows(); }
  const GpConfig& config() const { return cfg_; }
  const Eigen::VectorXd& hypers() const { return hypers_; }
  double lml() const { return lml_; }

  // Multi-start hyperparameter fit followed by factorization at the winner.
  void fit(std::mt19937_64& rng) {
    if (size() < 1) throw std::logic_error("gp: fit on empty dataset");
    const auto starts = detail::latin_hypercube(cfg_.n_starts, dim_ + 1,
                                                cfg_.start_lo, cfg_.start_hi, rng);
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_p = Eigen::VectorXd::Zero(dim_ + 1);
    for (const auto& start : starts) {
      auto [p, f] = detail::maximize_lml(X_, y_, start, cfg_);
      if (f > best) {
        best = f;
        best_p = p;
      }
    }
    if (!std::isfinite(best)) throw std::runtime_error("gp: all fit starts failed");
    set_hypers(best_p);
  }

  // Factorize at explicitly chosen hyperparameters (also used by tests).
  void set_hypers(const Eigen::VectorXd& p) {
    if (p.size() != dim_ + 1) throw std::invalid_argument("gp: bad hyper size");
    hypers_ = p;
    if (size() < 1) return;
    const Eigen::MatrixXd Kf = detail::kernel_matrix(X_, hypers_);
    if (!detail::chol_with_jitter(Kf, cfg_.noise_var, std::exp(hypers_[0]), llt_))
      throw std::runtime_error("gp: covariance not positive definite");
    alpha_ = llt_.solve(y_);
    double logdet_half = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i)
      logdet_half += std::log(llt_.matrixL()(i, i));
    lml_ = -0.5 * y_.dot(alpha_) - logdet_half -
           0.5 * static_cast<double>(size()) * std::log(2.0 * M_PI);
    factorized_ = true;
  }

  // Posterior over many query points (rows of Q) in one factorized solve.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_batch(
      const Eigen::MatrixXd& Q) const {
    if (Q.cols() != dim_) throw std::invalid_argument("gp: bad query size");
    const double prior_var = std::exp(hypers_[0]);
    const Eigen::Index m = Q.rows();
    if (size() < 1)
      return {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Constant(m, prior_var)};
    if (!factorized_) throw std::logic_error("gp: predict before fit");
    Eigen::MatrixXd Ks(size(), m);
    for (Eigen::Index i = 0; i < size(); ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        Ks(i, j) = matern52(X_.row(i), Q.row(j), hypers_);
    const Eigen::VectorXd mean = Ks.transpose() * alpha_;
    const Eigen::MatrixXd V = llt_.matrixL().solve(Ks);
    Eigen::VectorXd var(m);
    for (Eigen::Index j = 0; j < m; ++j)
      var[j] = std::max(prior_var - V.col(j).squaredNorm(), 0.0);
    return {mean, var};
  }

  // Posterior mean and latent variance at a query point. Prior when empty.
  std::pair<double, double> predict(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw std::invalid_argument("gp: bad query size");
    const double prior_var = std::exp(hypers_[0]);
    if (size() < 1) return {0.0, prior_var};
    if (!factorized_) throw std::logic_error("gp: predict before fit");
    Eigen::VectorXd ks(size());
    for (Eigen::Index i = 0; i < size(); ++i)
      ks[i] = matern52(X_.row(i), x, hypers_);
    const double mean = ks.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(ks);
    const double var = prior_var - v.squaredNorm();
    return {mean, std::max(var, 0.0)};
  }

 private:
  int dim_;
  GpConfig cfg_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::VectorXd hypers_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
  bool factorized_ = false;
};

}  // namespace gbo
