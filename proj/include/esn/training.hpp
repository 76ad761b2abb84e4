#pragma once

#include "esn/dynamics.hpp"
#include "esn/reservoir.hpp"
#include "esn/time_series.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace esn {

/// Which series columns are drive inputs and which are response variables.
/// The reservoir input is [drive columns..., response columns...]; the
/// readout predicts the response columns one step ahead.
struct ColumnLayout {
  std::vector<int> drive{kDriveZ};
  std::vector<int> response{3, 4, 5};

  Eigen::Index input_dim() const noexcept { return static_cast<Eigen::Index>(drive.size() + response.size()); }
  Eigen::Index output_dim() const noexcept { return static_cast<Eigen::Index>(response.size()); }
};

struct TrainingConfig {
  Eigen::Index transient_steps = 1000;
  ColumnLayout layout{};
  std::vector<TimeSeries> series;
  // Only used when the series are simulated from specs.
  Eigen::Index series_steps = 60000;
  Eigen::Index spinup_steps = 5000;
  double dt = 0.01;
};

void validate(const TrainingConfig& config);

/// Readout states (N x T) and next-step response targets (l x T), stacked
/// series by series. `block_offsets[k]` is the first column of series k.
struct RegressionBundle {
  Eigen::MatrixXd states;
  Eigen::MatrixXd targets;
  std::vector<Eigen::Index> block_offsets;
};

/// Gram matrix R R^T (lower triangle is authoritative) and cross term
/// R U^T, accumulated in column blocks so the full state matrix is never
/// stored.
class NormalEquations {
 public:
  NormalEquations(Eigen::Index features, Eigen::Index outputs, Eigen::Index block = 1024);

  void add(const Eigen::Ref<const Eigen::VectorXd>& feature, const Eigen::Ref<const Eigen::VectorXd>& target);
  /// Folds the pending block in. Called implicitly by gram()/cross().
  void flush();

  const Eigen::MatrixXd& gram();
  const Eigen::MatrixXd& cross();
  Eigen::Index count() const noexcept { return count_; }

 private:
  Eigen::MatrixXd gram_, cross_;
  Eigen::MatrixXd pending_features_, pending_targets_;
  Eigen::Index pending_ = 0;
  Eigen::Index count_ = 0;
};

/// Input vector u(t) for row t of a series under `layout`.
Eigen::VectorXd input_row(const TimeSeries& series, const ColumnLayout& layout, Eigen::Index t);

/// Open-loop pass over one series from r = 0. For each t the reservoir
/// absorbs u(t) to give r(t+1); after the first `transient` updates,
/// visit(features(r(t+1)), u_r(t+1)) is called. `advance(u)` must update its
/// state and return the feature vector.
template <typename Advance, typename Visit>
void for_each_training_pair(const TimeSeries& series, const ColumnLayout& layout, Eigen::Index transient,
                            Advance&& advance, Visit&& visit) {
  if (series.steps() < transient + 2)
    throw Error(ErrorKind::InvalidConfig, "training series has " + std::to_string(series.steps()) +
                                              " rows, need transient + 2 = " + std::to_string(transient + 2));
  const auto& v = series.values();
  const auto n_drive = static_cast<Eigen::Index>(layout.drive.size());
  Eigen::VectorXd u(layout.input_dim());
  Eigen::VectorXd target(layout.output_dim());
  for (Eigen::Index t = 0; t + 1 < series.steps(); ++t) {
    for (std::size_t j = 0; j < layout.drive.size(); ++j) u(static_cast<Eigen::Index>(j)) = v(t, layout.drive[j]);
    for (std::size_t j = 0; j < layout.response.size(); ++j)
      u(n_drive + static_cast<Eigen::Index>(j)) = v(t, layout.response[j]);
    const auto& features = advance(u);
    if (t < transient) continue;
    for (std::size_t j = 0; j < layout.response.size(); ++j)
      target(static_cast<Eigen::Index>(j)) = v(t + 1, layout.response[j]);
    visit(features, target);
  }
}

RegressionBundle collect_states(const TimeSeries& series, const EsnMatrices& mats, const EsnParams& params,
                                const ColumnLayout& layout, Eigen::Index transient);

/// Resets the reservoir per series and stacks the blocks.
RegressionBundle collect_states(std::span<const TimeSeries> series, const EsnMatrices& mats, const EsnParams& params,
                                const ColumnLayout& layout, Eigen::Index transient);

void accumulate_states(const TimeSeries& series, const EsnMatrices& mats, const EsnParams& params,
                       const ColumnLayout& layout, Eigen::Index transient, NormalEquations& normal);

/// Solves (G + beta I) X = C with G = R R^T, C = R U^T and returns X^T, i.e.
/// W_out = U R^T (R R^T + beta I)^-1 without forming the inverse.
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross, double beta);
Eigen::MatrixXd ridge_solve(const RegressionBundle& bundle, double beta);

struct TrainingMetadata {
  std::vector<CoupledSystemSpec> specs;  // empty when series were supplied directly
  Eigen::Index requested_nodes = 0;
  Eigen::Index transient_steps = 0;
  Eigen::Index series_count = 0;
  Eigen::Index series_steps = 0;
  Eigen::Index spinup_steps = 0;
  Eigen::Index total_columns = 0;
  double dt = 0.0;
};

struct EsnModel {
  EsnParams params;
  EsnMatrices matrices;
  ColumnLayout layout;
  TrainingMetadata training;

  bool trained() const noexcept { return matrices.w_out.has_value(); }
};

/// Builds matrices from params.seed and fits W_out on the configured
/// series. input_dim/output_dim come from the layout and n_nodes is
/// rounded down to a multiple of input_dim.
EsnModel train(EsnParams params, const TrainingConfig& config);

/// Simulates one series per spec (config.series_steps after
/// config.spinup_steps) and trains on them. All specs must share the
/// response parameters and epsilon.
EsnModel train(std::span<const CoupledSystemSpec> specs, const EsnParams& params, TrainingConfig config);

std::vector<TimeSeries> simulate_training_series(std::span<const CoupledSystemSpec> specs, const TrainingConfig& config);

}  // namespace esn
