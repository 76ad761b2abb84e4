#include "esn/experiment.hpp"

#include "esn/model_io.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace esn {

using nlohmann::json;

namespace {

// Parsing -----------------------------------------------------------------

struct FieldCheck {
  const ConfigDocument* doc = nullptr;

  void operator()(bool ok, const std::string& field, const std::string& message) const {
    if (ok) return;
    const std::string loc = doc && doc->has(field) ? doc->where(field) + ": " : std::string();
    throw Error(ErrorKind::InvalidConfig, loc + "field '" + field + "': " + message);
  }
};

std::vector<int> to_ints(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }
std::vector<std::int64_t> to_int64(const std::vector<int>& v) { return {v.begin(), v.end()}; }

Bounds read_bounds(const ConfigDocument& doc, const std::string& key, Bounds fallback) {
  const auto v = doc.numbers(key, {fallback.lower, fallback.upper});
  if (v.size() != 2)
    throw Error(ErrorKind::InvalidConfig, doc.where(key) + ": field '" + key + "' must be [lower, upper]");
  return {v[0], v[1]};
}

void check_drive(const FieldCheck& check, const std::string& field, const std::string& model) {
  check(model == "rossler" || model == "lorenz", field, "must be \"rossler\" or \"lorenz\", got \"" + model + "\"");
}

void validate_impl(const ExperimentConfig& c, const FieldCheck& check) {
  check(!c.name.empty(), "name", "must not be empty");
  check(!c.output_dir.empty(), "output_dir", "must not be empty");
  check(c.dt > 0.0 && std::isfinite(c.dt), "dt", "must be > 0");
  check(c.epsilon >= 0.0, "system.epsilon", "must be >= 0");
  check(c.spinup_steps >= 0, "system.spinup_steps", "must be >= 0");

  check_drive(check, "train.drive", c.train.drive);
  check(!c.train.values.empty(), "train.values", "needs at least one training system");
  check(c.train.transient >= 0, "train.transient", "must be >= 0");
  check(c.train.steps >= c.train.transient + 2, "train.transient",
        "transient (" + std::to_string(c.train.transient) + ") must be at most train.steps - 2 (" +
            std::to_string(c.train.steps - 2) + ")");
  const auto& layout = c.train.layout;
  check(!layout.drive.empty(), "train.drive_columns", "must not be empty");
  check(!layout.response.empty(), "train.response_columns", "must not be empty");
  for (int col : layout.drive) check(col >= 0 && col < 3, "train.drive_columns", "entries must be in 0..2");
  for (int col : layout.response) check(col >= 3 && col < 6, "train.response_columns", "entries must be in 3..5");

  const EsnParams& esn = c.esn;
  check(esn.sigma > 0.0, "esn.sigma", "must be > 0");
  check(esn.spectral_radius > 0.0, "esn.spectral_radius", "must be > 0");
  check(esn.leak >= 0.0 && esn.leak <= 1.0, "esn.leak", "must be in [0, 1]");
  check(esn.ridge_beta >= 0.0, "esn.ridge_beta", "must be >= 0");
  check(esn.density > 0.0 && esn.density <= 1.0, "esn.density", "must be in (0, 1]");
  try {
    EsnParams p = c.esn;
    p.input_dim = layout.input_dim();
    p.output_dim = layout.output_dim();
    validate(with_aligned_nodes(p));
  } catch (const Error& e) {
    check(false, "esn", e.what());
  }

  check_drive(check, "predict.drive", c.predict.drive.model);
  check(c.predict.warmup >= 0, "predict.warmup", "must be >= 0");
  check(c.predict.steps >= 2, "predict.steps", "must be >= 2");
  check(c.predict.initial_response.empty() ||
            c.predict.initial_response.size() == layout.response.size(),
        "predict.initial_response", "must have one entry per response column");

  check(c.sweep.realizations >= 1, "sweep.realizations", "must be >= 1");
  check(c.sweep.bins >= 1, "sweep.bins", "must be >= 1");

  check_drive(check, "scale.drive", c.scale.drive.model);
  check(!c.scale.amplitudes.empty(), "scale.amplitudes", "must not be empty");
  check(!c.scale.frequencies.empty(), "scale.frequencies", "must not be empty");
  for (double a : c.scale.amplitudes) check(a > 0.0, "scale.amplitudes", "entries must be > 0");
  for (double f : c.scale.frequencies) check(f > 0.0, "scale.frequencies", "entries must be > 0");

  const auto& h = c.hyperopt;
  check(h.method == "gp" || h.method == "random", "hyperopt.method", "must be \"gp\" or \"random\"");
  check(h.budget >= 1, "hyperopt.budget", "must be >= 1");
  check(h.method != "gp" || h.budget >= h.initial_points, "hyperopt.budget", "must be >= hyperopt.initial_points");
  check(h.initial_points >= 1, "hyperopt.initial_points", "must be >= 1");
  check(h.candidates >= 1, "hyperopt.candidates", "must be >= 1");
  check(h.realizations >= 1, "hyperopt.realizations", "must be >= 1");
  check(h.warmup >= 0, "hyperopt.warmup", "must be >= 0");
  check(h.horizon >= 2, "hyperopt.horizon", "must be >= 2");
  check_drive(check, "hyperopt.drive", h.drive.model);
  try {
    validate(h.space);
  } catch (const Error& e) {
    check(false, "hyperopt", e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const ConfigDocument& doc) {
  ExperimentConfig c;
  FieldCheck check{&doc};
  const auto non_negative = [&](const std::string& key, std::int64_t fallback) {
    const auto v = doc.integer(key, fallback);
    check(v >= 0, key, "must be >= 0");
    return v;
  };

  c.name = doc.string("name", c.name);
  c.output_dir = doc.string("output_dir", c.output_dir.string());
  c.seed = static_cast<std::uint64_t>(non_negative("seed", 0));
  c.dt = doc.number("dt", c.dt);

  c.response.a = doc.number("response.a", c.response.a);
  c.response.b = doc.number("response.b", c.response.b);
  c.response.c = doc.number("response.c", c.response.c);
  c.epsilon = doc.number("system.epsilon", c.epsilon);
  c.spinup_steps = doc.integer("system.spinup_steps", c.spinup_steps);
  const auto init = doc.numbers("system.initial_state", {c.initial_state.begin(), c.initial_state.end()});
  check(init.size() == 6, "system.initial_state", "needs 6 entries");
  std::copy(init.begin(), init.end(), c.initial_state.begin());
  c.rossler_drive.a = doc.number("rossler_drive.a", c.rossler_drive.a);
  c.rossler_drive.b = doc.number("rossler_drive.b", c.rossler_drive.b);
  c.lorenz_drive.sigma = doc.number("lorenz_drive.sigma", c.lorenz_drive.sigma);
  c.lorenz_drive.beta = doc.number("lorenz_drive.beta", c.lorenz_drive.beta);

  c.esn.n_nodes = doc.integer("esn.n_nodes", c.esn.n_nodes);
  c.esn.sigma = doc.number("esn.sigma", c.esn.sigma);
  c.esn.spectral_radius = doc.number("esn.spectral_radius", c.esn.spectral_radius);
  c.esn.leak = doc.number("esn.leak", c.esn.leak);
  c.esn.ridge_beta = doc.number("esn.ridge_beta", c.esn.ridge_beta);
  c.esn.density = doc.number("esn.density", c.esn.density);

  c.train.drive = doc.string("train.drive", c.train.drive);
  c.train.values = doc.numbers("train.values", c.train.values);
  c.train.steps = doc.integer("train.steps", c.train.steps);
  c.train.transient = doc.integer("train.transient", c.train.transient);
  c.train.layout.drive = to_ints(doc.integers("train.drive_columns", to_int64(c.train.layout.drive)));
  c.train.layout.response = to_ints(doc.integers("train.response_columns", to_int64(c.train.layout.response)));

  c.predict.drive.model = doc.string("predict.drive", c.predict.drive.model);
  c.predict.drive.value = doc.number("predict.value", c.predict.drive.value);
  c.predict.warmup = doc.integer("predict.warmup", c.predict.warmup);
  c.predict.steps = doc.integer("predict.steps", c.predict.steps);
  try {
    c.predict.warmup_mode =
        parse_warmup_mode(doc.string("predict.warmup_mode", std::string(to_string(c.predict.warmup_mode))));
  } catch (const Error& e) {
    check(false, "predict.warmup_mode", e.what());
  }
  try {
    c.predict.normalization =
        parse_normalization(doc.string("predict.normalization", std::string(to_string(c.predict.normalization))));
  } catch (const Error& e) {
    check(false, "predict.normalization", e.what());
  }
  c.predict.initial_response = doc.numbers("predict.initial_response", {});

  c.sweep.realizations = doc.integer("sweep.realizations", c.sweep.realizations);
  c.sweep.bins = doc.integer("sweep.bins", c.sweep.bins);

  c.scale.drive.model = doc.string("scale.drive", c.scale.drive.model);
  c.scale.drive.value = doc.number("scale.value", c.scale.drive.value);
  c.scale.amplitudes = doc.numbers("scale.amplitudes", c.scale.amplitudes);
  c.scale.frequencies = doc.numbers("scale.frequencies", c.scale.frequencies);

  auto& h = c.hyperopt;
  h.method = doc.string("hyperopt.method", h.method);
  h.budget = doc.integer("hyperopt.budget", h.budget);
  h.realizations = doc.integer("hyperopt.realizations", h.realizations);
  h.warmup = doc.integer("hyperopt.warmup", h.warmup);
  h.horizon = doc.integer("hyperopt.horizon", h.horizon);
  h.initial_points = doc.integer("hyperopt.initial_points", h.initial_points);
  h.candidates = doc.integer("hyperopt.candidates", h.candidates);
  h.drive.model = doc.string("hyperopt.drive", h.drive.model);
  h.drive.value = doc.number("hyperopt.value", h.drive.value);
  h.space.sigma = read_bounds(doc, "hyperopt.sigma_bounds", h.space.sigma);
  h.space.spectral_radius = read_bounds(doc, "hyperopt.spectral_radius_bounds", h.space.spectral_radius);
  h.space.leak = read_bounds(doc, "hyperopt.leak_bounds", h.space.leak);
  h.space.ridge_beta = read_bounds(doc, "hyperopt.ridge_beta_bounds", h.space.ridge_beta);

  const auto unknown = doc.unused_keys();
  if (!unknown.empty())
    throw Error(ErrorKind::InvalidConfig, doc.where(unknown.front()) + ": unknown field '" + unknown.front() + "'");

  validate_impl(c, check);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(ConfigDocument::load(path));
}

void validate(const ExperimentConfig& config) { validate_impl(config, FieldCheck{}); }

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  // Keep floats recognisable as floats when read back.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

template <typename T, typename F>
std::string array(const std::vector<T>& v, F&& fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out + "]";
}

std::string bounds(const Bounds& b) { return "[" + num(b.lower) + ", " + num(b.upper) + "]"; }

}  // namespace

std::string to_toml(const ExperimentConfig& c) {
  const auto i = [](auto v) { return std::to_string(v); };
  std::ostringstream o;
  o << "name = " << quoted(c.name) << '\n'
    << "output_dir = " << quoted(c.output_dir.string()) << '\n'
    << "seed = " << c.seed << '\n'
    << "dt = " << num(c.dt) << "\n\n";
  o << "[system]\n"
    << "epsilon = " << num(c.epsilon) << '\n'
    << "spinup_steps = " << c.spinup_steps << '\n'
    << "initial_state = " << array(std::vector<double>(c.initial_state.begin(), c.initial_state.end()), num)
    << "\n\n";
  o << "[response]\na = " << num(c.response.a) << "\nb = " << num(c.response.b) << "\nc = " << num(c.response.c)
    << "\n\n";
  o << "[rossler_drive]\na = " << num(c.rossler_drive.a) << "\nb = " << num(c.rossler_drive.b) << "\n\n";
  o << "[lorenz_drive]\nsigma = " << num(c.lorenz_drive.sigma) << "\nbeta = " << num(c.lorenz_drive.beta) << "\n\n";
  o << "[esn]\n"
    << "n_nodes = " << c.esn.n_nodes << '\n'
    << "sigma = " << num(c.esn.sigma) << '\n'
    << "spectral_radius = " << num(c.esn.spectral_radius) << '\n'
    << "leak = " << num(c.esn.leak) << '\n'
    << "ridge_beta = " << num(c.esn.ridge_beta) << '\n'
    << "density = " << num(c.esn.density) << "\n\n";
  o << "[train]\n"
    << "drive = " << quoted(c.train.drive) << '\n'
    << "values = " << array(c.train.values, num) << '\n'
    << "steps = " << c.train.steps << '\n'
    << "transient = " << c.train.transient << '\n'
    << "drive_columns = " << array(c.train.layout.drive, i) << '\n'
    << "response_columns = " << array(c.train.layout.response, i) << "\n\n";
  o << "[predict]\n"
    << "drive = " << quoted(c.predict.drive.model) << '\n'
    << "value = " << num(c.predict.drive.value) << '\n'
    << "warmup = " << c.predict.warmup << '\n'
    << "steps = " << c.predict.steps << '\n'
    << "warmup_mode = " << quoted(std::string(to_string(c.predict.warmup_mode))) << '\n'
    << "normalization = " << quoted(std::string(to_string(c.predict.normalization))) << '\n'
    << "initial_response = " << array(c.predict.initial_response, num) << "\n\n";
  o << "[sweep]\n"
    << "realizations = " << c.sweep.realizations << '\n'
    << "bins = " << c.sweep.bins << "\n\n";
  o << "[scale]\n"
    << "drive = " << quoted(c.scale.drive.model) << '\n'
    << "value = " << num(c.scale.drive.value) << '\n'
    << "amplitudes = " << array(c.scale.amplitudes, num) << '\n'
    << "frequencies = " << array(c.scale.frequencies, num) << "\n\n";
  const auto& h = c.hyperopt;
  o << "[hyperopt]\n"
    << "method = " << quoted(h.method) << '\n'
    << "budget = " << h.budget << '\n'
    << "realizations = " << h.realizations << '\n'
    << "warmup = " << h.warmup << '\n'
    << "horizon = " << h.horizon << '\n'
    << "initial_points = " << h.initial_points << '\n'
    << "candidates = " << h.candidates << '\n'
    << "drive = " << quoted(h.drive.model) << '\n'
    << "value = " << num(h.drive.value) << '\n'
    << "sigma_bounds = " << bounds(h.space.sigma) << '\n'
    << "spectral_radius_bounds = " << bounds(h.space.spectral_radius) << '\n'
    << "leak_bounds = " << bounds(h.space.leak) << '\n'
    << "ridge_beta_bounds = " << bounds(h.space.ridge_beta) << '\n';
  return o.str();
}

// Recipes -----------------------------------------------------------------

CoupledSystemSpec make_spec(const ExperimentConfig& c, const DriveChoice& drive) {
  CoupledSystemSpec spec;
  if (drive.model == "rossler") {
    RosslerParams p = c.rossler_drive;
    p.c = drive.value;
    spec.drive = p;
  } else if (drive.model == "lorenz") {
    LorenzParams p = c.lorenz_drive;
    p.rho = drive.value;
    spec.drive = p;
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown drive model \"" + drive.model + "\"");
  }
  spec.response = c.response;
  spec.epsilon = c.epsilon;
  spec.initial_state = c.initial_state;
  return spec;
}

std::vector<CoupledSystemSpec> training_specs(const ExperimentConfig& c) {
  std::vector<CoupledSystemSpec> specs;
  for (double v : c.train.values) specs.push_back(make_spec(c, {c.train.drive, v}));
  return specs;
}

TrainingConfig training_config(const ExperimentConfig& c) {
  TrainingConfig t;
  t.transient_steps = c.train.transient;
  t.layout = c.train.layout;
  t.series_steps = c.train.steps;
  t.spinup_steps = c.spinup_steps;
  t.dt = c.dt;
  return t;
}

TrainingConfig simulated_training_config(const ExperimentConfig& c) {
  TrainingConfig t = training_config(c);
  const auto specs = training_specs(c);
  t.series = simulate_training_series(specs, t);
  return t;
}

PredictionConfig prediction_config(const ExperimentConfig& c) {
  PredictionConfig p;
  p.warmup_steps = c.predict.warmup;
  p.n_predict = c.predict.steps;
  p.warmup_mode = c.predict.warmup_mode;
  if (!c.predict.initial_response.empty())
    p.initial_response = Eigen::Map<const Eigen::VectorXd>(c.predict.initial_response.data(),
                                                           static_cast<Eigen::Index>(c.predict.initial_response.size()));
  return p;
}

PredictionTask make_task(const ExperimentConfig& c, const DriveChoice& drive, Eigen::Index warmup, Eigen::Index steps,
                         const ColumnLayout& layout) {
  const TimeSeries coupled = simulate_coupled(make_spec(c, drive), warmup + steps + 1, c.dt, c.spinup_steps);
  return split_task(coupled, layout);
}

LossTask make_loss_task(const ExperimentConfig& c) {
  LossTask task;
  task.base = c.esn;
  task.training = simulated_training_config(c);
  task.validation = make_task(c, c.hyperopt.drive, c.hyperopt.warmup, c.hyperopt.horizon, c.train.layout);
  task.prediction = prediction_config(c);
  task.prediction.warmup_steps = c.hyperopt.warmup;
  task.prediction.n_predict = c.hyperopt.horizon;
  return task;
}

std::vector<ScaleCell> scale_study(const EsnModel& model, const ExperimentConfig& c) {
  const Eigen::Index rows = c.predict.warmup + c.predict.steps + 1;
  const double fmax = *std::max_element(c.scale.frequencies.begin(), c.scale.frequencies.end());
  const auto base_rows = static_cast<Eigen::Index>(std::ceil(static_cast<double>(rows - 1) * fmax)) + 1;
  const TimeSeries base = simulate_coupled(make_spec(c, c.scale.drive), std::max(base_rows, rows), c.dt, c.spinup_steps);
  const TimeSeries head = base.slice_rows(0, rows);
  const Eigen::Vector3d response0 = head.values().row(0).tail<3>().transpose();
  static constexpr int kDriveCols[] = {0, 1, 2};
  const PredictionConfig pc = prediction_config(c);

  std::vector<ScaleCell> cells;
  for (double freq : c.scale.frequencies) {
    for (double amp : c.scale.amplitudes) {
      const TimeSeries scaled = scale_drive(base, kDriveCols, amp, freq).slice_rows(0, rows);
      Eigen::MatrixXd coupled = head.values();
      coupled.leftCols<3>() = scaled.values().leftCols<3>();
      if (coupled.leftCols<3>() != head.values().leftCols<3>()) {
        const Eigen::VectorXd z = coupled.col(kDriveZ);
        coupled.rightCols<3>() = simulate_driven_response(z, c.dt, c.response, c.epsilon, response0).values();
      }
      const PredictionTask task = split_task(TimeSeries(coupled, c.dt, head.labels()), model.layout);
      double value = std::numeric_limits<double>::infinity();
      try {
        const TaskScore s = score_task(model, task, pc, c.predict.normalization);
        if (std::isfinite(s.nrmse)) value = std::log10(s.nrmse);
      } catch (const Error& e) {
        if (exit_code(e.kind()) != 3) throw;
      }
      cells.push_back({amp, freq, value});
    }
  }
  return cells;
}

void write_scale_grid_csv(const ExperimentConfig& c, const std::vector<ScaleCell>& cells,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "frequency_scaling\\amplitude_scaling";
  for (double a : c.scale.amplitudes) out << ',' << num(a);
  out << '\n';
  std::size_t k = 0;
  for (double f : c.scale.frequencies) {
    out << num(f);
    for (std::size_t j = 0; j < c.scale.amplitudes.size(); ++j) out << ',' << num(cells.at(k++).log10_nrmse);
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

// Commands ----------------------------------------------------------------

ExperimentConfig resolve_config(const CommandOptions& o) {
  ExperimentConfig c = load_experiment_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.method) c.hyperopt.method = *o.method;
  if (o.params) c.esn = read_best_params_json(*o.params).apply_to(c.esn);
  c.esn.seed = c.seed;
  validate(c);
  return c;
}

namespace {

std::filesystem::path prepare_output(const ExperimentConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + c.output_dir.string() + ": " + ec.message());
  std::ofstream out(c.output_dir / "effective_config.toml");
  if (!out) throw Error(ErrorKind::Io, "cannot write effective_config.toml in " + c.output_dir.string());
  out << to_toml(c);
  return c.output_dir;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json drive_json(const DriveChoice& d) { return {{"model", d.model}, {"value", d.value}}; }

}  // namespace

int cmd_train(const CommandOptions& o) {
  const ExperimentConfig c = resolve_config(o);
  const auto dir = prepare_output(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto specs = training_specs(c);
  const EsnModel model = train(specs, c.esn, training_config(c));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_model(model, dir / "model.json");
  write_json({{"experiment", c.name},
              {"seed", c.seed},
              {"series_count", model.training.series_count},
              {"series_steps", model.training.series_steps},
              {"transient_steps", model.training.transient_steps},
              {"total_columns", model.training.total_columns},
              {"n_nodes", model.params.n_nodes},
              {"requested_nodes", model.training.requested_nodes},
              {"dt", model.training.dt}},
             dir / "training_summary.json");
  write_json({{"wall_time_s", wall}}, dir / "timing.json");
  write_manifest(dir);
  return 0;
}

int cmd_predict(const CommandOptions& o) {
  const ExperimentConfig c = resolve_config(o);
  const EsnModel model = load_model(o.model.value_or(c.output_dir / "model.json"));
  if (!model.trained()) throw Error(ErrorKind::InvalidConfig, "model has no trained readout");
  const auto dir = prepare_output(c);
  const PredictionTask task = make_task(c, c.predict.drive, c.predict.warmup, c.predict.steps, model.layout);
  const PredictionConfig pc = prediction_config(c);
  const PredictionResult result = predict_task(model, task, pc);
  const TimeSeries target = task_target(task, pc);
  write_csv(target, dir / "target.csv");

  json summary = {{"experiment", c.name},
                  {"seed", model.params.seed},
                  {"drive", drive_json(c.predict.drive)},
                  {"warmup_steps", c.predict.warmup},
                  {"n_predict", c.predict.steps},
                  {"warmup_mode", to_string(c.predict.warmup_mode)},
                  {"normalization", to_string(c.predict.normalization)}};
  if (result.diverged()) {
    if (result.values.rows() >= 2) write_csv(TimeSeries(result.values, result.dt, result.labels), dir / "predicted.csv");
    summary["diverged_at"] = *result.diverged_at;
    summary["nrmse"] = nullptr;
    summary["log10_nrmse"] = nullptr;
    write_json(summary, dir / "summary.json");
    write_manifest(dir);
    std::cerr << "predict: closed-loop prediction diverged at step " << *result.diverged_at << '\n';
    return exit_code(ErrorKind::PredictionDivergence);
  }
  const TimeSeries predicted = result.series();
  write_csv(predicted, dir / "predicted.csv");
  const double e = nrmse(predicted, target, c.predict.normalization);
  summary["diverged_at"] = nullptr;
  summary["nrmse"] = e;
  summary["log10_nrmse"] = std::log10(e);
  write_json(summary, dir / "summary.json");
  write_manifest(dir);
  return 0;
}

int cmd_sweep(const CommandOptions& o) {
  const ExperimentConfig c = resolve_config(o);
  const auto dir = prepare_output(c);
  const TrainingConfig tc = simulated_training_config(c);
  const PredictionTask task = make_task(c, c.predict.drive, c.predict.warmup, c.predict.steps, c.train.layout);
  const PredictionConfig pc = prediction_config(c);
  const RealizationTrial trial = [&](std::uint64_t seed) {
    EsnParams p = c.esn;
    p.seed = seed;
    const EsnModel model = train(p, tc);
    const TaskScore s = score_task(model, task, pc, c.predict.normalization);
    const AccuracyRecord r = std::isfinite(s.nrmse) ? make_record(seed, s.nrmse, pc.n_predict)
                                                    : diverged_record(seed, pc.n_predict);
    std::cerr << "sweep: seed " << seed << " log10_nrmse " << r.log10_nrmse << '\n';
    return r;
  };
  const auto records = realization_sweep(trial, c.sweep.realizations, c.seed);
  const Histogram h = histogram(records, c.sweep.bins);
  write_records_csv(records, dir / "records.csv");
  write_histogram_json(h, dir / "histogram.json");

  std::vector<double> logs;
  Eigen::Index below = 0;
  for (const auto& r : records) {
    logs.push_back(r.log10_nrmse);
    if (r.log10_nrmse <= -2.0) ++below;
  }
  const bool any_finite = h.excluded < static_cast<Eigen::Index>(records.size());
  write_json({{"experiment", c.name},
              {"realizations", records.size()},
              {"seed0", c.seed},
              {"excluded", h.excluded},
              {"median_log10_nrmse", finite_or_null(median(logs))},
              {"mode_log10_nrmse", any_finite ? json(h.mode()) : json(nullptr)},
              {"fraction_log10_nrmse_le_-2", static_cast<double>(below) / static_cast<double>(records.size())}},
             dir / "sweep_summary.json");
  write_manifest(dir);
  return 0;
}

int cmd_scale(const CommandOptions& o) {
  const ExperimentConfig c = resolve_config(o);
  const EsnModel model = load_model(o.model.value_or(c.output_dir / "model.json"));
  if (!model.trained()) throw Error(ErrorKind::InvalidConfig, "model has no trained readout");
  const auto dir = prepare_output(c);
  const auto cells = scale_study(model, c);
  write_scale_grid_csv(c, cells, dir / "scale_grid.csv");
  json rows = json::array();
  for (const auto& cell : cells)
    rows.push_back({{"amplitude", cell.amplitude},
                    {"frequency", cell.frequency},
                    {"log10_nrmse", finite_or_null(cell.log10_nrmse)}});
  write_json({{"experiment", c.name}, {"seed", model.params.seed}, {"drive", drive_json(c.scale.drive)}, {"cells", rows}},
             dir / "scale_summary.json");
  write_manifest(dir);
  return 0;
}

int cmd_hyperopt(const CommandOptions& o) {
  const ExperimentConfig c = resolve_config(o);
  const auto dir = prepare_output(c);
  const LossTask task = make_loss_task(c);
  OptimizerOptions opts;
  opts.budget = c.hyperopt.budget;
  opts.seed = c.seed;
  opts.initial_points = c.hyperopt.initial_points;
  opts.candidates = c.hyperopt.candidates;
  if (o.resume) opts.resume = read_trace_csv(*o.resume);
  const auto k = c.hyperopt.realizations;
  const Objective objective = [&](const HyperPoint& p) {
    const EvalPoint e = evaluate_loss(p, task, k, c.seed);
    std::cerr << "hyperopt: sigma " << p.sigma << " rho " << p.spectral_radius << " leak " << p.leak << " beta "
              << p.ridge_beta << " -> loss " << e.loss << '\n';
    return e;
  };
  const OptimizationResult result = c.hyperopt.method == "gp" ? gp_optimize(c.hyperopt.space, opts, objective)
                                                              : random_search(c.hyperopt.space, opts, objective);
  write_trace_csv(result, dir / "trace.csv");
  write_best_params_json(result.best().params, dir / "best_params.json");
  write_json({{"experiment", c.name},
              {"method", c.hyperopt.method},
              {"budget", c.hyperopt.budget},
              {"realizations", k},
              {"best_iteration", result.best_index},
              {"best_loss", result.best().loss},
              {"gp_fallbacks", result.gp_fallbacks}},
             dir / "hyperopt_summary.json");
  write_json({{"evaluations", result.evaluations}, {"replayed", opts.resume.size()}}, dir / "timing.json");
  write_manifest(dir);
  return 0;
}

// Manifest ----------------------------------------------------------------

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

void write_manifest(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name != "manifest.json" && name != "timing.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  json list = json::array();
  for (const auto& f : files)
    list.push_back({{"path", f.filename().string()}, {"bytes", std::filesystem::file_size(f)}, {"sha256", sha256_file(f)}});
  write_json({{"files", list}}, dir / "manifest.json");
}

}  // namespace esn
