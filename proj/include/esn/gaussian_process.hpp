#pragma once

#include "esn/reservoir.hpp"

#include <Eigen/Dense>

namespace esn {

/// Squared-exponential kernel s^2 exp(-0.5 sum_i (x_i - x'_i)^2 / l_i^2),
/// hyperparameters stored in log space.
struct GpHyperparameters {
  Eigen::VectorXd log_length_scales;
  double log_signal_variance = 0.0;
};

/// Log marginal likelihood of standardized targets `y`, optionally with its
/// gradient w.r.t. (log_length_scales..., log_signal_variance).
double gp_log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyperparameters& h,
                                  double noise, Eigen::VectorXd* gradient = nullptr);

/// GP regression on inputs in the unit cube. Targets are standardized
/// internally; predictions come back on the original scale.
class GaussianProcess {
 public:
  struct Options {
    double noise = 1e-6;
    int restarts = 3;
    int iterations = 200;
    double min_log_length = -4.6;  // ~0.01
    double max_log_length = 2.3;   // ~10
  };

  /// Maximum-likelihood fit of the kernel hyperparameters. Throws
  /// IllConditioned if the kernel matrix cannot be factored.
  static GaussianProcess fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Rng& rng, const Options& options);
  static GaussianProcess fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Rng& rng) {
    return fit(x, y, rng, Options{});
  }
  /// Fixed hyperparameters, no likelihood search.
  static GaussianProcess with_hyperparameters(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                              GpHyperparameters h, double noise = 1e-6);

  void predict(const Eigen::MatrixXd& xs, Eigen::VectorXd& mean, Eigen::VectorXd& stddev) const;
  const GpHyperparameters& hyperparameters() const noexcept { return hyper_; }

 private:
  GaussianProcess() = default;
  void factor();

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_std_;
  double y_mean_ = 0.0, y_scale_ = 1.0, noise_ = 1e-6;
  GpHyperparameters hyper_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

/// Expected improvement for minimization: E[max(best - f, 0)] under
/// f ~ N(mean, stddev^2). Reduces to max(best - mean, 0) when stddev = 0.
double expected_improvement(double mean, double stddev, double best);

}  // namespace esn
