#pragma once

#include "esn/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <random>

namespace esn {

using SparseMatrixR = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Rng = std::mt19937_64;

struct EsnParams {
  Eigen::Index n_nodes = 1200;
  Eigen::Index input_dim = 4;
  Eigen::Index output_dim = 3;
  double sigma = 0.0639;
  double spectral_radius = 0.5057;
  double leak = 0.6057;
  double ridge_beta = 4.7487e-5;
  double density = 0.02;
  std::uint64_t seed = 0;
};

/// Throws InvalidParams when an invariant does not hold. N is expected to
/// be a multiple of m already (see with_aligned_nodes).
void validate(const EsnParams& params);

/// Rounds n_nodes down to the nearest multiple of input_dim.
EsnParams with_aligned_nodes(EsnParams params);

struct EsnMatrices {
  Eigen::MatrixXd w_in;                 // N x m
  SparseMatrixR w_res;                  // N x N
  std::optional<Eigen::MatrixXd> w_out; // l x N once trained
};

/// Row block j (N/m rows) feeds only from input column j. Weights are
/// uniform in [-sigma, sigma].
Eigen::MatrixXd build_input_matrix(const EsnParams& params, Rng& rng);

/// Bernoulli(density) sparsity pattern, values uniform in [-1, 1], rescaled
/// to the requested spectral radius. A draw with zero spectral radius is
/// redrawn from the same generator, at most 5 times.
SparseMatrixR build_reservoir_matrix(const EsnParams& params, Rng& rng);

struct SpectralRadiusOptions {
  double tolerance = 1e-10;
  int max_matvecs = 10000;
  int krylov_dim = 100;
  std::uint64_t start_seed = 0x5eed;
};

/// Largest eigenvalue modulus by restarted complex Arnoldi. Handles
/// dominant complex-conjugate pairs, which plain power iteration does not.
double spectral_radius(const SparseMatrixR& a, const SpectralRadiusOptions& options = {});

/// Scales `a` so that its spectral radius becomes `target`.
SparseMatrixR rescale_to_spectral_radius(const SparseMatrixR& a, double target,
                                         const SpectralRadiusOptions& options = {});

/// Seeds a generator with params.seed and draws w_in, then w_res.
EsnMatrices build_matrices(const EsnParams& params);

/// (1 - leak) r + leak tanh(w_res r + w_in u).
template <typename DerivedR, typename DerivedU>
Eigen::VectorXd update_state(const Eigen::MatrixBase<DerivedR>& r, const Eigen::MatrixBase<DerivedU>& u,
                             const EsnMatrices& mats, double leak) {
  if (r.size() != mats.w_res.rows() || u.size() != mats.w_in.cols())
    throw Error(ErrorKind::InvalidParams, "update_state: dimension mismatch");
  Eigen::VectorXd pre = mats.w_res * r.derived();
  pre.noalias() += mats.w_in * u.derived();
  return (1.0 - leak) * r.derived() + leak * pre.array().tanh().matrix();
}

/// Readout feature map. With 1-based numbering, odd entries pass through and
/// even entries are squared; in 0-based storage that means odd *indices*
/// (1, 3, 5, ...) are squared.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> readout_state(const Eigen::MatrixBase<Derived>& r) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out = r;
  for (Eigen::Index i = 1; i < out.size(); i += 2) out(i) = out(i) * out(i);
  return out;
}

template <typename Derived, typename Out>
void readout_state_into(const Eigen::MatrixBase<Derived>& r, Eigen::MatrixBase<Out>& out) {
  out = r;
  for (Eigen::Index i = 1; i < out.size(); i += 2) out(i) = out(i) * out(i);
}

/// Mutable reservoir state plus scratch buffers, for the hot loops in
/// training and prediction. Holds a reference to the matrices.
class Reservoir {
 public:
  Reservoir(const EsnMatrices& mats, double leak)
      : mats_(&mats), leak_(leak), r_(Eigen::VectorXd::Zero(mats.w_res.rows())), pre_(r_.size()) {}

  const Eigen::VectorXd& state() const noexcept { return r_; }
  void set_state(const Eigen::VectorXd& r) { r_ = r; }
  void reset() { r_.setZero(); }

  template <typename DerivedU>
  void step(const Eigen::MatrixBase<DerivedU>& u) {
    pre_.noalias() = mats_->w_res * r_;
    pre_.noalias() += mats_->w_in * u.derived();
    r_ = (1.0 - leak_) * r_ + leak_ * pre_.array().tanh().matrix();
  }

 private:
  const EsnMatrices* mats_;
  double leak_;
  Eigen::VectorXd r_;
  Eigen::VectorXd pre_;
};

}  // namespace esn
