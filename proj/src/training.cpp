#include "esn/training.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace esn {

void validate(const TrainingConfig& config) {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, "training: " + what); };
  const auto& layout = config.layout;
  if (config.transient_steps < 0) fail("transient_steps must be >= 0");
  if (layout.drive.empty() || layout.response.empty()) fail("drive and response columns must be non-empty");
  std::set<int> seen;
  for (int c : layout.drive) seen.insert(c);
  for (int c : layout.response)
    if (!seen.insert(c).second) fail("drive and response columns overlap at column " + std::to_string(c));
  if (config.series.empty()) return;
  const double dt = config.series.front().dt();
  const Eigen::Index cols = config.series.front().dims();
  for (const auto& s : config.series) {
    if (s.dt() != dt) fail("series disagree on dt");
    if (s.dims() != cols) fail("series disagree on column count");
    if (s.steps() < config.transient_steps + 2)
      fail("series length " + std::to_string(s.steps()) + " must be >= transient_steps + 2 = " +
           std::to_string(config.transient_steps + 2));
  }
  for (int c : seen)
    if (c < 0 || c >= cols) fail("column " + std::to_string(c) + " out of range");
}

NormalEquations::NormalEquations(Eigen::Index features, Eigen::Index outputs, Eigen::Index block)
    : gram_(Eigen::MatrixXd::Zero(features, features)),
      cross_(Eigen::MatrixXd::Zero(features, outputs)),
      pending_features_(features, block),
      pending_targets_(outputs, block) {}

void NormalEquations::add(const Eigen::Ref<const Eigen::VectorXd>& feature,
                          const Eigen::Ref<const Eigen::VectorXd>& target) {
  pending_features_.col(pending_) = feature;
  pending_targets_.col(pending_) = target;
  ++count_;
  if (++pending_ == pending_features_.cols()) flush();
}

void NormalEquations::flush() {
  if (pending_ == 0) return;
  const auto f = pending_features_.leftCols(pending_);
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(f);
  cross_.noalias() += f * pending_targets_.leftCols(pending_).transpose();
  pending_ = 0;
}

const Eigen::MatrixXd& NormalEquations::gram() {
  flush();
  return gram_;
}

const Eigen::MatrixXd& NormalEquations::cross() {
  flush();
  return cross_;
}

Eigen::VectorXd input_row(const TimeSeries& series, const ColumnLayout& layout, Eigen::Index t) {
  Eigen::VectorXd u(layout.input_dim());
  Eigen::Index k = 0;
  for (int c : layout.drive) u(k++) = series.values()(t, c);
  for (int c : layout.response) u(k++) = series.values()(t, c);
  return u;
}

namespace {

struct TanhAdvance {
  Reservoir reservoir;
  Eigen::VectorXd features;

  TanhAdvance(const EsnMatrices& mats, double leak) : reservoir(mats, leak), features(mats.w_res.rows()) {}

  const Eigen::VectorXd& operator()(const Eigen::VectorXd& u) {
    reservoir.step(u);
    readout_state_into(reservoir.state(), features);
    return features;
  }
};

void check_dims(const EsnMatrices& mats, const ColumnLayout& layout) {
  if (mats.w_in.cols() != layout.input_dim())
    throw Error(ErrorKind::InvalidParams, "w_in column count does not match the column layout");
}

}  // namespace

RegressionBundle collect_states(const TimeSeries& series, const EsnMatrices& mats, const EsnParams& params,
                                const ColumnLayout& layout, Eigen::Index transient) {
  return collect_states(std::span<const TimeSeries>(&series, 1), mats, params, layout, transient);
}

RegressionBundle collect_states(std::span<const TimeSeries> series, const EsnMatrices& mats, const EsnParams& params,
                                const ColumnLayout& layout, Eigen::Index transient) {
  check_dims(mats, layout);
  Eigen::Index total = 0;
  for (const auto& s : series) {
    if (s.steps() < transient + 2)
      throw Error(ErrorKind::InvalidConfig, "collect_states: series shorter than transient + 2");
    total += s.steps() - transient - 1;
  }
  RegressionBundle bundle;
  bundle.states.resize(mats.w_res.rows(), total);
  bundle.targets.resize(layout.output_dim(), total);
  Eigen::Index col = 0;
  for (const auto& s : series) {
    bundle.block_offsets.push_back(col);
    TanhAdvance advance(mats, params.leak);
    for_each_training_pair(s, layout, transient, advance, [&](const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
      bundle.states.col(col) = f;
      bundle.targets.col(col) = y;
      ++col;
    });
  }
  return bundle;
}

void accumulate_states(const TimeSeries& series, const EsnMatrices& mats, const EsnParams& params,
                       const ColumnLayout& layout, Eigen::Index transient, NormalEquations& normal) {
  check_dims(mats, layout);
  TanhAdvance advance(mats, params.leak);
  for_each_training_pair(series, layout, transient, advance,
                         [&](const Eigen::VectorXd& f, const Eigen::VectorXd& y) { normal.add(f, y); });
}

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross, double beta) {
  if (!(beta >= 0.0)) throw Error(ErrorKind::InvalidParams, "ridge_solve: beta must be >= 0");
  if (gram.rows() == 0 || gram.rows() != gram.cols() || cross.rows() != gram.rows())
    throw Error(ErrorKind::InvalidParams, "ridge_solve: inconsistent dimensions");

  Eigen::MatrixXd system = gram.selfadjointView<Eigen::Lower>();
  system.diagonal().array() += beta;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  const auto d = ldlt.vectorD().cwiseAbs();
  const double floor = static_cast<double>(system.rows()) * std::numeric_limits<double>::epsilon() *
                       std::max(d.maxCoeff(), std::numeric_limits<double>::min());
  if (ldlt.info() != Eigen::Success || (beta == 0.0 && d.minCoeff() <= floor))
    throw Error(ErrorKind::IllConditioned, "ridge_solve: singular normal equations; use ridge_beta > 0");
  return ldlt.solve(cross).transpose();
}

Eigen::MatrixXd ridge_solve(const RegressionBundle& bundle, double beta) {
  if (bundle.states.cols() == 0 || bundle.states.cols() != bundle.targets.cols())
    throw Error(ErrorKind::InvalidParams, "ridge_solve: empty or misaligned bundle");
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(bundle.states.rows(), bundle.states.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(bundle.states);
  const Eigen::MatrixXd cross = bundle.states * bundle.targets.transpose();
  return ridge_solve(gram, cross, beta);
}

EsnModel train(EsnParams params, const TrainingConfig& config) {
  validate(config);
  if (config.series.empty()) throw Error(ErrorKind::InvalidConfig, "training: no series");

  const Eigen::Index requested = params.n_nodes;
  params.input_dim = config.layout.input_dim();
  params.output_dim = config.layout.output_dim();
  params = with_aligned_nodes(params);

  EsnModel model;
  model.params = params;
  model.layout = config.layout;
  model.matrices = build_matrices(params);

  NormalEquations normal(params.n_nodes, params.output_dim);
  for (const auto& s : config.series)
    accumulate_states(s, model.matrices, params, config.layout, config.transient_steps, normal);
  model.matrices.w_out = ridge_solve(normal.gram(), normal.cross(), params.ridge_beta);

  auto& meta = model.training;
  meta.requested_nodes = requested;
  meta.transient_steps = config.transient_steps;
  meta.series_count = static_cast<Eigen::Index>(config.series.size());
  meta.series_steps = config.series.front().steps();
  meta.spinup_steps = config.spinup_steps;
  meta.total_columns = normal.count();
  meta.dt = config.series.front().dt();
  return model;
}

std::vector<TimeSeries> simulate_training_series(std::span<const CoupledSystemSpec> specs,
                                                 const TrainingConfig& config) {
  if (specs.empty()) throw Error(ErrorKind::InvalidConfig, "training: no system specs");
  const auto& first = specs.front();
  for (const auto& s : specs) {
    if (s.response.a != first.response.a || s.response.b != first.response.b || s.response.c != first.response.c ||
        s.epsilon != first.epsilon)
      throw Error(ErrorKind::InvalidConfig, "training: specs must share the response system and epsilon");
  }
  std::vector<TimeSeries> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(simulate_coupled(s, config.series_steps, config.dt, config.spinup_steps));
  return out;
}

EsnModel train(std::span<const CoupledSystemSpec> specs, const EsnParams& params, TrainingConfig config) {
  config.series = simulate_training_series(specs, config);
  EsnModel model = train(params, config);
  model.training.specs.assign(specs.begin(), specs.end());
  return model;
}

}  // namespace esn
