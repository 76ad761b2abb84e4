#include "esn/gaussian_process.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace esn {

namespace {

Eigen::MatrixXd kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const GpHyperparameters& h) {
  const Eigen::RowVectorXd inv_len = (-h.log_length_scales.array()).exp().matrix().transpose();
  const Eigen::MatrixXd as = a.array().rowwise() * inv_len.array();
  const Eigen::MatrixXd bs = b.array().rowwise() * inv_len.array();
  Eigen::MatrixXd d2 = (-2.0 * as * bs.transpose()).colwise() + as.rowwise().squaredNorm();
  d2.rowwise() += bs.rowwise().squaredNorm().transpose();
  return std::exp(h.log_signal_variance) * (-0.5 * d2.array().max(0.0)).exp().matrix();
}

}  // namespace

double gp_log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyperparameters& h,
                                  double noise, Eigen::VectorXd* gradient) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd k = kernel(x, x, h);
  Eigen::MatrixXd k_noisy = k;
  k_noisy.diagonal().array() += noise;
  Eigen::LLT<Eigen::MatrixXd> llt(k_noisy);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(y);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double lml = -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  if (gradient) {
    // d lml / d theta = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta)
    const Eigen::MatrixXd inner = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
    gradient->resize(d + 1);
    for (Eigen::Index p = 0; p < d; ++p) {
      const double inv_l2 = std::exp(-2.0 * h.log_length_scales(p));
      Eigen::MatrixXd dk(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          const double diff = x(i, p) - x(j, p);
          dk(i, j) = k(i, j) * diff * diff * inv_l2;
        }
      (*gradient)(p) = 0.5 * inner.cwiseProduct(dk).sum();
    }
    (*gradient)(d) = 0.5 * inner.cwiseProduct(k).sum();
  }
  return lml;
}

GaussianProcess GaussianProcess::with_hyperparameters(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                                      GpHyperparameters h, double noise) {
  if (x.rows() != y.size() || x.rows() == 0)
    throw Error(ErrorKind::InvalidParams, "gaussian process: need matching, non-empty x and y");
  GaussianProcess gp;
  gp.x_ = x;
  gp.noise_ = noise;
  gp.y_mean_ = y.mean();
  const double var = (y.array() - gp.y_mean_).square().mean();
  gp.y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
  gp.y_std_ = (y.array() - gp.y_mean_) / gp.y_scale_;
  gp.hyper_ = std::move(h);
  gp.factor();
  return gp;
}

void GaussianProcess::factor() {
  Eigen::MatrixXd k = kernel(x_, x_, hyper_);
  k.diagonal().array() += noise_;
  llt_.compute(k);
  if (llt_.info() != Eigen::Success) throw Error(ErrorKind::IllConditioned, "gaussian process: kernel not positive definite");
  alpha_ = llt_.solve(y_std_);
  if (!alpha_.allFinite()) throw Error(ErrorKind::IllConditioned, "gaussian process: degenerate kernel");
}

GaussianProcess GaussianProcess::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Rng& rng,
                                     const Options& opt) {
  GaussianProcess gp = with_hyperparameters(
      x, y, {Eigen::VectorXd::Constant(x.cols(), std::log(0.3)), 0.0}, opt.noise);
  const Eigen::Index d = x.cols();
  std::uniform_real_distribution<double> start(std::log(0.05), std::log(2.0));

  auto clamp = [&](GpHyperparameters& h) {
    h.log_length_scales = h.log_length_scales.cwiseMax(opt.min_log_length).cwiseMin(opt.max_log_length);
    h.log_signal_variance = std::clamp(h.log_signal_variance, std::log(1e-2), std::log(1e2));
  };

  GpHyperparameters best = gp.hyper_;
  double best_lml = gp_log_marginal_likelihood(x, gp.y_std_, best, opt.noise);
  for (int restart = 0; restart < opt.restarts; ++restart) {
    GpHyperparameters h = gp.hyper_;
    if (restart > 0)
      for (Eigen::Index p = 0; p < d; ++p) h.log_length_scales(p) = start(rng);
    // Adam ascent in log space.
    Eigen::VectorXd m = Eigen::VectorXd::Zero(d + 1), v = Eigen::VectorXd::Zero(d + 1), g;
    constexpr double lr = 0.05, b1 = 0.9, b2 = 0.999;
    for (int it = 1; it <= opt.iterations; ++it) {
      const double lml = gp_log_marginal_likelihood(x, gp.y_std_, h, opt.noise, &g);
      if (!std::isfinite(lml) || !g.allFinite()) break;
      if (lml > best_lml) {
        best_lml = lml;
        best = h;
      }
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g.cwiseAbs2();
      const Eigen::VectorXd step = lr * (m / (1 - std::pow(b1, it))).array() /
                                   ((v / (1 - std::pow(b2, it))).array().sqrt() + 1e-8);
      h.log_length_scales += step.head(d);
      h.log_signal_variance += step(d);
      clamp(h);
    }
  }
  if (!std::isfinite(best_lml)) throw Error(ErrorKind::IllConditioned, "gaussian process: likelihood not finite");
  gp.hyper_ = best;
  gp.factor();
  return gp;
}

void GaussianProcess::predict(const Eigen::MatrixXd& xs, Eigen::VectorXd& mean, Eigen::VectorXd& stddev) const {
  const Eigen::MatrixXd ks = kernel(xs, x_, hyper_);
  mean = (ks * alpha_).array() * y_scale_ + y_mean_;
  const Eigen::MatrixXd v = llt_.matrixL().solve(ks.transpose());
  const Eigen::ArrayXd var = std::exp(hyper_.log_signal_variance) - v.colwise().squaredNorm().transpose().array();
  stddev = var.max(0.0).sqrt().matrix() * y_scale_;
}

double expected_improvement(double mean, double stddev, double best) {
  const double gain = best - mean;
  if (!(stddev > 0.0)) return std::max(gain, 0.0);
  const double z = gain / stddev;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(gain * cdf + stddev * pdf, 0.0);
}

}  // namespace esn
