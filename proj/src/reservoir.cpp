#include "esn/reservoir.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace esn {

void validate(const EsnParams& p) {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidParams, "esn params: " + what); };
  if (p.input_dim < 1) fail("input_dim must be >= 1");
  if (p.output_dim < 1 || p.output_dim > p.input_dim) fail("output_dim must be in [1, input_dim]");
  if (p.n_nodes <= p.input_dim) fail("n_nodes must exceed input_dim");
  if (p.n_nodes % p.input_dim != 0) fail("n_nodes must be a multiple of input_dim");
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) fail("sigma must be > 0");
  if (!(p.spectral_radius > 0.0) || !std::isfinite(p.spectral_radius)) fail("spectral_radius must be > 0");
  if (!(p.leak >= 0.0 && p.leak <= 1.0)) fail("leak must be in [0, 1]");
  if (!(p.ridge_beta >= 0.0) || !std::isfinite(p.ridge_beta)) fail("ridge_beta must be >= 0");
  if (!(p.density > 0.0 && p.density <= 1.0)) fail("density must be in (0, 1]");
}

EsnParams with_aligned_nodes(EsnParams p) {
  if (p.input_dim < 1) throw Error(ErrorKind::InvalidParams, "esn params: input_dim must be >= 1");
  p.n_nodes -= p.n_nodes % p.input_dim;
  return p;
}

Eigen::MatrixXd build_input_matrix(const EsnParams& p, Rng& rng) {
  if (p.input_dim < 1) throw Error(ErrorKind::InvalidParams, "build_input_matrix: input_dim must be >= 1");
  if (p.n_nodes % p.input_dim != 0)
    throw Error(ErrorKind::InvalidParams, "build_input_matrix: n_nodes not a multiple of input_dim");
  const Eigen::Index block = p.n_nodes / p.input_dim;
  std::uniform_real_distribution<double> weight(-p.sigma, p.sigma);
  Eigen::MatrixXd w_in = Eigen::MatrixXd::Zero(p.n_nodes, p.input_dim);
  for (Eigen::Index i = 0; i < p.n_nodes; ++i) w_in(i, i / block) = weight(rng);
  return w_in;
}

double spectral_radius(const SparseMatrixR& a, const SpectralRadiusOptions& opt) {
  using Complex = std::complex<double>;
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) throw Error(ErrorKind::InvalidParams, "spectral_radius: matrix must be square");
  const double a_norm = a.norm();
  if (a_norm == 0.0) return 0.0;

  const Eigen::Index k = std::min<Eigen::Index>(n, opt.krylov_dim);
  Rng rng(opt.start_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = unit(rng);

  Eigen::MatrixXcd basis(n, k + 1);
  Eigen::MatrixXcd hess(k + 1, k);
  Eigen::VectorXd re(n), im(n);
  Eigen::VectorXcd w(n);
  double estimate = 0.0;
  int matvecs = 0;

  while (matvecs < opt.max_matvecs) {
    basis.col(0) = v / v.norm();
    hess.setZero();
    Eigen::Index m = k;
    bool invariant = false;
    for (Eigen::Index j = 0; j < k; ++j) {
      re.noalias() = a * basis.col(j).real();
      im.noalias() = a * basis.col(j).imag();
      w.real() = re;
      w.imag() = im;
      ++matvecs;
      // Modified Gram-Schmidt, two passes.
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i <= j; ++i) {
          const Complex h = basis.col(i).dot(w);
          w -= h * basis.col(i);
          hess(i, j) += h;
        }
      }
      const double beta = w.norm();
      hess(j + 1, j) = beta;
      if (beta <= 1e-13 * a_norm) {
        m = j + 1;
        invariant = true;
        break;
      }
      basis.col(j + 1) = w / beta;
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(hess.topLeftCorner(m, m));
    if (es.info() != Eigen::Success) throw Error(ErrorKind::IllConditioned, "spectral_radius: Ritz solve failed");
    Eigen::Index best = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&best);
    const double theta = std::abs(es.eigenvalues()(best));
    Eigen::VectorXcd y = es.eigenvectors().col(best);
    y /= y.norm();
    estimate = theta;

    const double residual = invariant ? 0.0 : std::abs(hess(m, m - 1)) * std::abs(y(m - 1));
    if (invariant || residual <= opt.tolerance * std::max(theta, 1e-300)) return theta;
    v = basis.leftCols(m) * y;
  }
  return estimate;
}

SparseMatrixR rescale_to_spectral_radius(const SparseMatrixR& a, double target, const SpectralRadiusOptions& opt) {
  const double lambda = spectral_radius(a, opt);
  if (!(lambda > 1e-12 * a.norm()) || lambda == 0.0)
    throw Error(ErrorKind::IllConditioned, "rescale_to_spectral_radius: spectral radius is zero");
  return a * (target / lambda);
}

SparseMatrixR build_reservoir_matrix(const EsnParams& p, Rng& rng) {
  if (p.n_nodes < 2) throw Error(ErrorKind::InvalidParams, "build_reservoir_matrix: need N >= 2");
  if (!(p.density > 0.0 && p.density <= 1.0))
    throw Error(ErrorKind::InvalidParams, "build_reservoir_matrix: density must be in (0, 1]");

  std::bernoulli_distribution present(p.density);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  constexpr int kAttempts = 5;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(p.density * p.n_nodes * p.n_nodes * 1.1) + 16);
    for (Eigen::Index i = 0; i < p.n_nodes; ++i)
      for (Eigen::Index j = 0; j < p.n_nodes; ++j)
        if (present(rng)) entries.emplace_back(i, j, weight(rng));
    SparseMatrixR w(p.n_nodes, p.n_nodes);
    w.setFromTriplets(entries.begin(), entries.end());
    w.makeCompressed();
    if (w.nonZeros() == 0) continue;
    const double lambda = spectral_radius(w);
    if (lambda > 1e-12 * w.norm()) {
      SparseMatrixR scaled = w * (p.spectral_radius / lambda);
      scaled.makeCompressed();
      return scaled;
    }
  }
  throw Error(ErrorKind::IllConditioned, "build_reservoir_matrix: zero spectral radius after 5 draws");
}

EsnMatrices build_matrices(const EsnParams& params) {
  validate(params);
  Rng rng(params.seed);
  EsnMatrices mats;
  mats.w_in = build_input_matrix(params, rng);
  mats.w_res = build_reservoir_matrix(params, rng);
  return mats;
}

}  // namespace esn
