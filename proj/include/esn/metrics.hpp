#pragma once

#include "esn/errors.hpp"
#include "esn/prediction.hpp"
#include "esn/time_series.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace esn {

enum class NrmseNormalization { Std, Range };

std::string_view to_string(NrmseNormalization n) noexcept;
NrmseNormalization parse_normalization(std::string_view text);

/// Root-mean-square error pooled over every entry.
template <typename DerivedP, typename DerivedT>
double rmse(const Eigen::MatrixBase<DerivedP>& predicted, const Eigen::MatrixBase<DerivedT>& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols() || target.size() == 0)
    throw Error(ErrorKind::InvalidParams, "rmse: shape mismatch");
  return std::sqrt((predicted.derived() - target.derived()).squaredNorm() / static_cast<double>(target.size()));
}

/// RMSE divided by the pooled population standard deviation of the target
/// (or its pooled max - min range).
template <typename DerivedP, typename DerivedT>
double nrmse(const Eigen::MatrixBase<DerivedP>& predicted, const Eigen::MatrixBase<DerivedT>& target,
             NrmseNormalization normalization = NrmseNormalization::Std) {
  const double err = rmse(predicted, target);
  double scale = 0.0;
  if (normalization == NrmseNormalization::Std) {
    const double mean = target.mean();
    scale = std::sqrt((target.array() - mean).square().sum() / static_cast<double>(target.size()));
  } else {
    scale = target.maxCoeff() - target.minCoeff();
  }
  if (!(scale > 0.0)) throw Error(ErrorKind::UndefinedNormalization, "nrmse: target is constant");
  return err / scale;
}

double nrmse(const TimeSeries& predicted, const TimeSeries& target,
             NrmseNormalization normalization = NrmseNormalization::Std);

struct AccuracyRecord {
  std::uint64_t seed = 0;
  double nrmse = 0.0;
  double log10_nrmse = 0.0;
  Eigen::Index n_steps = 0;
  bool diverged = false;
};

AccuracyRecord make_record(std::uint64_t seed, double nrmse_value, Eigen::Index n_steps);
/// nrmse and log10_nrmse are +infinity.
AccuracyRecord diverged_record(std::uint64_t seed, Eigen::Index n_steps);

/// One realization: build, train and score an ESN for the given seed.
using RealizationTrial = std::function<AccuracyRecord(std::uint64_t seed)>;

/// Runs seeds seed0 .. seed0 + n - 1 in order. Numerical failures inside a
/// trial become diverged records; other errors propagate.
std::vector<AccuracyRecord> realization_sweep(const RealizationTrial& trial, Eigen::Index n_realizations,
                                              std::uint64_t seed0);

struct Histogram {
  std::vector<double> edges;         // bins + 1, strictly increasing
  std::vector<Eigen::Index> counts;  // finite records per bin
  Eigen::Index excluded = 0;         // diverged records

  /// Centre of the most populated bin (first one on ties).
  double mode() const;
};

/// Uniform bins over [min, max] of the finite log10 NRMSE values. When all
/// values coincide the range is widened to value +/- 0.5.
Histogram histogram(std::span<const AccuracyRecord> records, Eigen::Index bins);

double median(std::vector<double> values);

struct TaskScore {
  PredictionResult prediction;
  double rmse = 0.0;   // +inf if diverged
  double nrmse = 0.0;  // +inf if diverged
};

/// Predicts the task and scores it against task_target.
TaskScore score_task(const EsnModel& model, const PredictionTask& task, const PredictionConfig& config,
                     NrmseNormalization normalization = NrmseNormalization::Std);

void write_records_csv(std::span<const AccuracyRecord> records, const std::filesystem::path& path);
std::vector<AccuracyRecord> read_records_csv(const std::filesystem::path& path);
void write_histogram_json(const Histogram& h, const std::filesystem::path& path);

}  // namespace esn
