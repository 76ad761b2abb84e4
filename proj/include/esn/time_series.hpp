#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace esn {

/// Uniformly sampled multivariate trajectory. Rows are time steps, columns
/// are state variables.
class TimeSeries {
 public:
  TimeSeries() = default;
  /// Validates: finite entries, dt > 0, >= 2 rows, >= 1 column, one label per column.
  TimeSeries(Eigen::MatrixXd values, double dt, std::vector<std::string> labels);
  /// Labels default to x0, x1, ...
  TimeSeries(Eigen::MatrixXd values, double dt);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double dt() const noexcept { return dt_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  Eigen::Index steps() const noexcept { return values_.rows(); }
  Eigen::Index dims() const noexcept { return values_.cols(); }

  TimeSeries select_columns(std::span<const int> columns) const;
  /// Rows [first, first + count).
  TimeSeries slice_rows(Eigen::Index first, Eigen::Index count) const;

 private:
  Eigen::MatrixXd values_;
  double dt_ = 0.0;
  std::vector<std::string> labels_;
};

/// CSV with a header row of labels and "%.17g" values. The dt and labels
/// go to a sidecar JSON next to it (see sidecar_path).
void write_csv(const TimeSeries& series, const std::filesystem::path& csv_path);
TimeSeries read_csv(const std::filesystem::path& csv_path);

/// "predicted.csv" -> "predicted.meta.json"
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace esn
