#pragma once

#include "esn/gaussian_process.hpp"
#include "esn/metrics.hpp"
#include "esn/prediction.hpp"
#include "esn/training.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace esn {

/// The four searched hyperparameters.
struct HyperPoint {
  double sigma = 0.0;
  double spectral_radius = 0.0;
  double leak = 0.0;
  double ridge_beta = 0.0;

  EsnParams apply_to(EsnParams base) const;
};

struct Bounds {
  double lower = 0.0;
  double upper = 1.0;
};

/// Box search space. ridge_beta is searched in log10 space.
struct SearchSpace {
  Bounds sigma{1e-3, 1.0};
  Bounds spectral_radius{0.1, 1.5};
  Bounds leak{0.01, 1.0};
  Bounds ridge_beta{1e-9, 1e-2};

  static constexpr int kDims = 4;

  HyperPoint from_unit(const Eigen::Vector4d& u) const;
  Eigen::Vector4d to_unit(const HyperPoint& p) const;
};

void validate(const SearchSpace& space);

struct EvalPoint {
  HyperPoint params;
  double loss = 0.0;
  Eigen::Index k = 0;
};

using Objective = std::function<EvalPoint(const HyperPoint&)>;

/// What evaluate_loss trains on and predicts.
struct LossTask {
  EsnParams base;            // N, density and the other fixed parameters
  TrainingConfig training;   // series already populated
  PredictionTask validation; // held-out drive with its true response
  PredictionConfig prediction{1000, 2000, std::nullopt, WarmupMode::TeacherForced, std::nullopt};
};

/// Mean RMSE over k realizations (seeds seed0 ..). A realization that
/// diverges, fails numerically, or exceeds the cap scores the cap, which is
/// 10x the pooled std of the validation target.
EvalPoint evaluate_loss(const HyperPoint& params, const LossTask& task, Eigen::Index k, std::uint64_t seed0);

struct OptimizerOptions {
  Eigen::Index budget = 30;
  std::uint64_t seed = 0;
  Eigen::Index initial_points = 10;
  Eigen::Index candidates = 1000;
  /// Completed evaluations from an earlier run of the same configuration;
  /// they are replayed instead of evaluated.
  std::vector<EvalPoint> resume;
};

struct OptimizationResult {
  std::vector<EvalPoint> trace;
  std::vector<double> running_best;
  Eigen::Index best_index = 0;
  Eigen::Index evaluations = 0;    // objective calls made by this run
  Eigen::Index gp_fallbacks = 0;   // iterations that fell back to a random point

  const EvalPoint& best() const { return trace.at(static_cast<std::size_t>(best_index)); }
};

/// Scrambled Halton start (initial_points), then expected improvement over
/// `candidates` uniform candidates under a GP fitted to every evaluation.
OptimizationResult gp_optimize(const SearchSpace& space, const OptimizerOptions& options, const Objective& objective);

/// Uniform sampling of the unit cube (log-uniform in ridge_beta).
OptimizationResult random_search(const SearchSpace& space, const OptimizerOptions& options,
                                 const Objective& objective);

/// Radical-inverse Halton point `index` (1-based) in the first four prime bases.
Eigen::Vector4d halton_point(std::uint64_t index);

void write_trace_csv(const OptimizationResult& result, const std::filesystem::path& path);
std::vector<EvalPoint> read_trace_csv(const std::filesystem::path& path);
/// {"sigma":..., "spectral_radius":..., "leak":..., "ridge_beta":...}
void write_best_params_json(const HyperPoint& best, const std::filesystem::path& path);
HyperPoint read_best_params_json(const std::filesystem::path& path);

}  // namespace esn
