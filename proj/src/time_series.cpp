#include "esn/time_series.hpp"

#include "esn/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace esn {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParams: return "invalid-params";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::InvalidScaling: return "invalid-scaling";
    case ErrorKind::IntegrationBlowup: return "integration-blowup";
    case ErrorKind::PredictionDivergence: return "prediction-divergence";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::UndefinedNormalization: return "undefined-normalization";
    case ErrorKind::EmptyData: return "empty-data";
    case ErrorKind::Incompatible: return "incompatible";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::IntegrationBlowup:
    case ErrorKind::PredictionDivergence:
    case ErrorKind::IllConditioned:
    case ErrorKind::UndefinedNormalization:
    case ErrorKind::EmptyData:
      return 3;
    case ErrorKind::Io:
      return 4;
    default:
      return 2;
  }
}

namespace {

std::vector<std::string> default_labels(Eigen::Index n) {
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < n; ++i) labels.push_back("x" + std::to_string(i));
  return labels;
}

}  // namespace

TimeSeries::TimeSeries(Eigen::MatrixXd values, double dt, std::vector<std::string> labels)
    : values_(std::move(values)), dt_(dt), labels_(std::move(labels)) {
  if (!(dt_ > 0.0) || !std::isfinite(dt_))
    throw Error(ErrorKind::InvalidParams, "time series: dt must be positive and finite");
  if (values_.cols() < 1 || values_.rows() < 2)
    throw Error(ErrorKind::InvalidParams, "time series: need at least 2 rows and 1 column");
  if (static_cast<Eigen::Index>(labels_.size()) != values_.cols())
    throw Error(ErrorKind::InvalidParams, "time series: label count does not match column count");
  if (!values_.allFinite())
    throw Error(ErrorKind::InvalidParams, "time series: non-finite entry");
}

TimeSeries::TimeSeries(Eigen::MatrixXd values, double dt)
    : TimeSeries(values, dt, default_labels(values.cols())) {}

TimeSeries TimeSeries::select_columns(std::span<const int> columns) const {
  Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const int c = columns[j];
    if (c < 0 || c >= values_.cols())
      throw Error(ErrorKind::InvalidParams, "time series: column index " + std::to_string(c) + " out of range");
    out.col(static_cast<Eigen::Index>(j)) = values_.col(c);
    labels.push_back(labels_[static_cast<std::size_t>(c)]);
  }
  return TimeSeries(std::move(out), dt_, std::move(labels));
}

TimeSeries TimeSeries::slice_rows(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > values_.rows())
    throw Error(ErrorKind::InvalidParams, "time series: row slice out of range");
  return TimeSeries(values_.middleRows(first, count), dt_, labels_);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void write_csv(const TimeSeries& series, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + csv_path.string());
  const auto& labels = series.labels();
  for (std::size_t j = 0; j < labels.size(); ++j) out << (j ? "," : "") << labels[j];
  out << '\n';
  char buf[32];
  const auto& v = series.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", v(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + csv_path.string());

  nlohmann::json meta = {{"dt", series.dt()}, {"labels", labels}};
  std::ofstream side(sidecar_path(csv_path));
  if (!side) throw Error(ErrorKind::Io, "cannot write " + sidecar_path(csv_path).string());
  side << meta.dump(2) << '\n';
}

TimeSeries read_csv(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, csv_path.string() + ": empty file");

  std::vector<std::string> labels;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) labels.push_back(cell);
  }

  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      flat.push_back(std::strtod(cell.c_str(), nullptr));
      ++cols;
    }
    if (cols != labels.size())
      throw Error(ErrorKind::Io, csv_path.string() + ": row " + std::to_string(rows + 1) + " has wrong width");
    ++rows;
  }

  const auto side = sidecar_path(csv_path);
  std::ifstream meta_in(side);
  if (!meta_in) throw Error(ErrorKind::Io, "missing sidecar " + side.string());
  const auto meta = nlohmann::json::parse(meta_in);
  const double dt = meta.at("dt").get<double>();

  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < labels.size(); ++j)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * labels.size() + j];
  return TimeSeries(std::move(values), dt, std::move(labels));
}

}  // namespace esn
