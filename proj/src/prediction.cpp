#include "esn/prediction.hpp"

#include <cmath>

namespace esn {

std::string_view to_string(WarmupMode mode) noexcept {
  switch (mode) {
    case WarmupMode::TeacherForced: return "teacher_forced";
    case WarmupMode::FrozenResponse: return "frozen_response";
    case WarmupMode::HoldInput: return "hold_input";
  }
  return "teacher_forced";
}

WarmupMode parse_warmup_mode(std::string_view text) {
  if (text == "teacher_forced") return WarmupMode::TeacherForced;
  if (text == "frozen_response") return WarmupMode::FrozenResponse;
  if (text == "hold_input") return WarmupMode::HoldInput;
  throw Error(ErrorKind::InvalidConfig, "unknown warmup_mode '" + std::string(text) + "'");
}

TimeSeries PredictionResult::series() const {
  if (diverged_at)
    throw Error(ErrorKind::PredictionDivergence,
                "prediction diverged at step " + std::to_string(*diverged_at), static_cast<std::size_t>(*diverged_at));
  return TimeSeries(values, dt, labels);
}

PredictionResult predict_response(const EsnModel& model, const TimeSeries& drive, const PredictionConfig& config,
                                  const TimeSeries* response_history) {
  if (!model.trained()) throw Error(ErrorKind::InvalidParams, "predict_response: model is not trained");
  const auto& layout = model.layout;
  const auto n_drive = static_cast<Eigen::Index>(layout.drive.size());
  const Eigen::Index l = layout.output_dim();
  const Eigen::Index warmup = config.warmup_steps;
  const Eigen::Index n = config.n_predict;

  if (warmup < 0 || n < 1) throw Error(ErrorKind::InvalidConfig, "prediction: need warmup_steps >= 0, n_predict >= 1");
  if (drive.dims() != n_drive)
    throw Error(ErrorKind::Incompatible, "prediction: drive has " + std::to_string(drive.dims()) +
                                             " columns, model expects " + std::to_string(n_drive));
  if (model.training.dt > 0.0 && drive.dt() != model.training.dt)
    throw Error(ErrorKind::Incompatible, "prediction: drive dt differs from the training dt");
  if (drive.steps() < warmup + n)
    throw Error(ErrorKind::InvalidConfig, "prediction: drive needs warmup_steps + n_predict rows");
  if (response_history) {
    if (response_history->dims() != l || response_history->steps() <= warmup)
      throw Error(ErrorKind::InvalidConfig, "prediction: response history has the wrong shape");
  }
  if (config.warmup_mode == WarmupMode::TeacherForced && warmup > 0 && !response_history)
    throw Error(ErrorKind::InvalidConfig, "prediction: teacher-forced warm-up needs a response history");

  Eigen::VectorXd initial = Eigen::VectorXd::Zero(l);
  if (config.initial_response) {
    initial = *config.initial_response;
  } else if (response_history) {
    initial = response_history->values().row(warmup).transpose();
  }
  if (initial.size() != l || !initial.allFinite())
    throw Error(ErrorKind::InvalidConfig, "prediction: initial_response must have l finite entries");

  const auto& d = drive.values();
  const Eigen::MatrixXd& w_out = *model.matrices.w_out;
  Reservoir reservoir(model.matrices, model.params.leak);
  if (config.reservoir_state) {
    if (config.reservoir_state->size() != w_out.cols() || !config.reservoir_state->allFinite())
      throw Error(ErrorKind::InvalidConfig, "prediction: reservoir_state must have N finite entries");
    reservoir.set_state(*config.reservoir_state);
  }
  Eigen::VectorXd u(n_drive + l);
  Eigen::VectorXd features(w_out.cols());

  for (Eigen::Index t = 0; t < warmup; ++t) {
    switch (config.warmup_mode) {
      case WarmupMode::TeacherForced:
        u.head(n_drive) = d.row(t).transpose();
        u.tail(l) = response_history->values().row(t).transpose();
        break;
      case WarmupMode::FrozenResponse:
        u.head(n_drive) = d.row(t).transpose();
        u.tail(l) = initial;
        break;
      case WarmupMode::HoldInput:
        u.head(n_drive) = d.row(warmup).transpose();
        u.tail(l) = initial;
        break;
    }
    reservoir.step(u);
  }

  PredictionResult result;
  result.dt = drive.dt();
  static const char* names[] = {"x_r", "y_r", "z_r"};
  for (Eigen::Index j = 0; j < l; ++j) result.labels.emplace_back(j < 3 ? names[j] : "v" + std::to_string(j));
  result.values.resize(n, l);

  Eigen::VectorXd v = initial;
  for (Eigen::Index k = 0; k < n; ++k) {
    u.head(n_drive) = d.row(warmup + k).transpose();
    u.tail(l) = v;
    reservoir.step(u);
    readout_state_into(reservoir.state(), features);
    v.noalias() = w_out * features;
    if (!v.allFinite() || v.cwiseAbs().maxCoeff() > kBlowupThreshold) {
      result.diverged_at = k;
      result.values.conservativeResize(k, l);
      return result;
    }
    result.values.row(k) = v.transpose();
  }
  return result;
}

PredictionTask split_task(const TimeSeries& coupled, const ColumnLayout& layout) {
  return {coupled.select_columns(layout.drive), coupled.select_columns(layout.response)};
}

TimeSeries task_target(const PredictionTask& task, const PredictionConfig& config) {
  if (task.response.steps() < config.warmup_steps + config.n_predict + 1)
    throw Error(ErrorKind::InvalidConfig, "prediction task: response needs warmup_steps + n_predict + 1 rows");
  return task.response.slice_rows(config.warmup_steps + 1, config.n_predict);
}

PredictionResult predict_task(const EsnModel& model, const PredictionTask& task, const PredictionConfig& config) {
  return predict_response(model, task.drive, config, &task.response);
}

}  // namespace esn
