#pragma once

#include "esn/time_series.hpp"
#include "esn/training.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace esn {

/// What the response slot of the input holds while the reservoir warms up.
enum class WarmupMode {
  TeacherForced,   // true response history u_r(t)
  FrozenResponse,  // initial_response at every step, drive moves
  HoldInput,       // the whole first closed-loop input, drive included
};

std::string_view to_string(WarmupMode mode) noexcept;
WarmupMode parse_warmup_mode(std::string_view text);

struct PredictionConfig {
  Eigen::Index warmup_steps = 1000;
  Eigen::Index n_predict = 10000;
  std::optional<Eigen::VectorXd> initial_response;
  WarmupMode warmup_mode = WarmupMode::TeacherForced;
  std::optional<Eigen::VectorXd> reservoir_state;  // r before warm-up; zeros if unset
};

struct PredictionResult {
  Eigen::MatrixXd values;  // rows emitted before any divergence
  double dt = 0.0;
  std::vector<std::string> labels;
  std::optional<Eigen::Index> diverged_at;

  bool diverged() const noexcept { return diverged_at.has_value(); }
  /// Throws PredictionDivergence if diverged, InvalidParams if fewer than 2 rows.
  TimeSeries series() const;
};

/// Closed-loop response prediction driven by an external signal.
///
/// `drive` holds exactly the layout's drive columns. Rows [0, warmup) warm
/// the reservoir up from r = 0; row `warmup` is the first closed-loop input,
/// paired with the initial response. Row k of the result estimates the
/// response at drive row warmup + 1 + k, so `drive` needs at least
/// warmup + n_predict rows.
///
/// `response_history` (l columns, aligned with `drive`) supplies the
/// teacher-forced warm-up and the default initial response; without it the
/// initial response defaults to zeros.
PredictionResult predict_response(const EsnModel& model, const TimeSeries& drive, const PredictionConfig& config,
                                  const TimeSeries* response_history = nullptr);

/// A drive signal and the true response it produced, row-aligned.
struct PredictionTask {
  TimeSeries drive;
  TimeSeries response;
};

/// Splits a coupled trajectory into drive and response under `layout`.
PredictionTask split_task(const TimeSeries& coupled, const ColumnLayout& layout);

/// Rows that a prediction with `config` should reproduce:
/// response[warmup + 1, warmup + n_predict].
TimeSeries task_target(const PredictionTask& task, const PredictionConfig& config);

/// predict_response with the task's response as warm-up history.
PredictionResult predict_task(const EsnModel& model, const PredictionTask& task, const PredictionConfig& config);

}  // namespace esn
