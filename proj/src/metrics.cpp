#include "esn/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace esn {

std::string_view to_string(NrmseNormalization n) noexcept {
  return n == NrmseNormalization::Std ? "std" : "range";
}

NrmseNormalization parse_normalization(std::string_view text) {
  if (text == "std") return NrmseNormalization::Std;
  if (text == "range") return NrmseNormalization::Range;
  throw Error(ErrorKind::InvalidConfig, "unknown nrmse normalization '" + std::string(text) + "'");
}

double nrmse(const TimeSeries& predicted, const TimeSeries& target, NrmseNormalization normalization) {
  return nrmse(predicted.values(), target.values(), normalization);
}

AccuracyRecord make_record(std::uint64_t seed, double value, Eigen::Index n_steps) {
  if (!std::isfinite(value) || value < 0.0) return diverged_record(seed, n_steps);
  return {seed, value, value > 0.0 ? std::log10(value) : -std::numeric_limits<double>::infinity(), n_steps, false};
}

AccuracyRecord diverged_record(std::uint64_t seed, Eigen::Index n_steps) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {seed, inf, inf, n_steps, true};
}

std::vector<AccuracyRecord> realization_sweep(const RealizationTrial& trial, Eigen::Index n, std::uint64_t seed0) {
  if (n < 1) throw Error(ErrorKind::InvalidConfig, "realization_sweep: n_realizations must be >= 1");
  std::vector<AccuracyRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(i);
    try {
      records.push_back(trial(seed));
    } catch (const Error& e) {
      if (exit_code(e.kind()) != 3) throw;
      records.push_back(diverged_record(seed, static_cast<Eigen::Index>(e.step().value_or(0))));
    }
  }
  return records;
}

double Histogram::mode() const {
  if (counts.empty()) throw Error(ErrorKind::EmptyData, "histogram: no bins");
  const auto it = std::max_element(counts.begin(), counts.end());
  const auto i = static_cast<std::size_t>(it - counts.begin());
  return 0.5 * (edges[i] + edges[i + 1]);
}

Histogram histogram(std::span<const AccuracyRecord> records, Eigen::Index bins) {
  if (bins < 1) throw Error(ErrorKind::InvalidConfig, "histogram: bins must be >= 1");
  Histogram h;
  std::vector<double> values;
  for (const auto& r : records) {
    if (r.diverged || !std::isfinite(r.log10_nrmse))
      ++h.excluded;
    else
      values.push_back(r.log10_nrmse);
  }
  if (values.empty()) throw Error(ErrorKind::EmptyData, "histogram: every record diverged");

  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double min = *lo, max = *hi;
  if (max - min <= 0.0) {
    min -= 0.5;
    max += 0.5;
  }
  const double width = (max - min) / static_cast<double>(bins);
  for (Eigen::Index i = 0; i <= bins; ++i) h.edges.push_back(i == bins ? max : min + width * static_cast<double>(i));
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto i = static_cast<Eigen::Index>(std::floor((v - min) / width));
    i = std::clamp<Eigen::Index>(i, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(i)];
  }
  return h;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyData, "median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_records_csv(std::span<const AccuracyRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "seed,nrmse,log10_nrmse,n_steps,diverged\n";
  char a[32], b[32];
  for (const auto& r : records) {
    std::snprintf(a, sizeof a, "%.17g", r.nrmse);
    std::snprintf(b, sizeof b, "%.17g", r.log10_nrmse);
    out << r.seed << ',' << a << ',' << b << ',' << r.n_steps << ',' << (r.diverged ? 1 : 0) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<AccuracyRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<AccuracyRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw Error(ErrorKind::Io, path.string() + ": malformed record row");
    AccuracyRecord r;
    r.seed = std::stoull(cells[0]);
    r.nrmse = std::strtod(cells[1].c_str(), nullptr);
    r.log10_nrmse = std::strtod(cells[2].c_str(), nullptr);
    r.n_steps = std::stoll(cells[3]);
    r.diverged = cells[4] == "1";
    records.push_back(r);
  }
  return records;
}

void write_histogram_json(const Histogram& h, const std::filesystem::path& path) {
  nlohmann::json j = {{"edges", h.edges}, {"counts", h.counts}, {"excluded", h.excluded}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

TaskScore score_task(const EsnModel& model, const PredictionTask& task, const PredictionConfig& config,
                     NrmseNormalization normalization) {
  const TimeSeries target = task_target(task, config);
  TaskScore score{predict_task(model, task, config)};
  if (score.prediction.diverged()) {
    score.rmse = score.nrmse = std::numeric_limits<double>::infinity();
    return score;
  }
  score.rmse = rmse(score.prediction.values, target.values());
  score.nrmse = nrmse(score.prediction.values, target.values(), normalization);
  return score;
}

}  // namespace esn
