#include "esn/hyperopt.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace esn {

EsnParams HyperPoint::apply_to(EsnParams base) const {
  base.sigma = sigma;
  base.spectral_radius = spectral_radius;
  base.leak = leak;
  base.ridge_beta = ridge_beta;
  return base;
}

namespace {

double lerp(const Bounds& b, double u) { return b.lower + u * (b.upper - b.lower); }
double unlerp(const Bounds& b, double v) { return (v - b.lower) / (b.upper - b.lower); }

}  // namespace

HyperPoint SearchSpace::from_unit(const Eigen::Vector4d& u) const {
  const double lo = std::log10(ridge_beta.lower), hi = std::log10(ridge_beta.upper);
  return {lerp(sigma, u(0)), lerp(spectral_radius, u(1)), lerp(leak, u(2)), std::pow(10.0, lo + u(3) * (hi - lo))};
}

Eigen::Vector4d SearchSpace::to_unit(const HyperPoint& p) const {
  const double lo = std::log10(ridge_beta.lower), hi = std::log10(ridge_beta.upper);
  return {unlerp(sigma, p.sigma), unlerp(spectral_radius, p.spectral_radius), unlerp(leak, p.leak),
          (std::log10(p.ridge_beta) - lo) / (hi - lo)};
}

void validate(const SearchSpace& s) {
  for (const Bounds* b : {&s.sigma, &s.spectral_radius, &s.leak, &s.ridge_beta})
    if (!(b->lower < b->upper)) throw Error(ErrorKind::InvalidConfig, "search space: lower bound must be < upper");
  if (!(s.ridge_beta.lower > 0.0)) throw Error(ErrorKind::InvalidConfig, "search space: ridge_beta must be > 0");
  if (!(s.sigma.lower > 0.0) || !(s.spectral_radius.lower > 0.0) || s.leak.lower < 0.0 || s.leak.upper > 1.0)
    throw Error(ErrorKind::InvalidConfig, "search space: bounds violate EsnParams invariants");
}

EvalPoint evaluate_loss(const HyperPoint& params, const LossTask& task, Eigen::Index k, std::uint64_t seed0) {
  if (k < 1) throw Error(ErrorKind::InvalidConfig, "evaluate_loss: k must be >= 1");
  const TimeSeries target = task_target(task.validation, task.prediction);
  const auto& t = target.values();
  const double pooled_std = std::sqrt((t.array() - t.mean()).square().mean());
  const double cap = 10.0 * pooled_std;

  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    EsnParams p = params.apply_to(task.base);
    p.seed = seed0 + static_cast<std::uint64_t>(i);
    double loss = cap;
    try {
      const EsnModel model = train(p, task.training);
      const TaskScore score = score_task(model, task.validation, task.prediction);
      if (std::isfinite(score.rmse)) loss = std::min(score.rmse, cap);
    } catch (const Error& e) {
      if (exit_code(e.kind()) != 3) throw;
    }
    total += loss;
  }
  return {params, total / static_cast<double>(k), k};
}

Eigen::Vector4d halton_point(std::uint64_t index) {
  static constexpr int primes[] = {2, 3, 5, 7};
  Eigen::Vector4d out;
  for (int d = 0; d < 4; ++d) {
    double f = 1.0, r = 0.0;
    for (std::uint64_t i = index; i > 0; i /= primes[d]) {
      f /= primes[d];
      r += f * static_cast<double>(i % primes[d]);
    }
    out(d) = r;
  }
  return out;
}

namespace {

struct Runner {
  const SearchSpace& space;
  const OptimizerOptions& options;
  const Objective& objective;
  OptimizationResult result;

  void record(const Eigen::Vector4d& unit) {
    const HyperPoint p = space.from_unit(unit);
    const auto i = static_cast<std::size_t>(result.trace.size());
    EvalPoint e;
    if (i < options.resume.size()) {
      e = options.resume[i];
      const Eigen::Vector4d stored = space.to_unit(e.params);
      if ((stored - unit).cwiseAbs().maxCoeff() > 1e-9)
        throw Error(ErrorKind::InvalidConfig,
                    "resume: trace row " + std::to_string(i) + " does not match this configuration");
    } else {
      e = objective(p);
      ++result.evaluations;
    }
    const double best = result.running_best.empty() ? e.loss : std::min(result.running_best.back(), e.loss);
    if (result.running_best.empty() || e.loss < result.running_best.back())
      result.best_index = static_cast<Eigen::Index>(i);
    result.trace.push_back(e);
    result.running_best.push_back(best);
  }
};

void check_options(const SearchSpace& space, const OptimizerOptions& o, Eigen::Index min_budget) {
  validate(space);
  if (o.budget < min_budget)
    throw Error(ErrorKind::InvalidConfig, "optimizer: budget must be >= " + std::to_string(min_budget));
  if (static_cast<Eigen::Index>(o.resume.size()) > o.budget)
    throw Error(ErrorKind::InvalidConfig, "optimizer: resume trace is longer than the budget");
}

}  // namespace

OptimizationResult gp_optimize(const SearchSpace& space, const OptimizerOptions& options, const Objective& objective) {
  check_options(space, options, options.initial_points);
  Rng rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Runner run{space, options, objective, {}};

  Eigen::Vector4d shift;
  for (int d = 0; d < 4; ++d) shift(d) = unit(rng);
  for (Eigen::Index i = 0; i < options.initial_points; ++i) {
    Eigen::Vector4d u = halton_point(static_cast<std::uint64_t>(i + 1)) + shift;
    u = u.array() - u.array().floor();
    run.record(u);
  }

  Eigen::MatrixXd candidates(options.candidates, 4);
  for (Eigen::Index it = options.initial_points; it < options.budget; ++it) {
    for (Eigen::Index c = 0; c < candidates.rows(); ++c)
      for (int d = 0; d < 4; ++d) candidates(c, d) = unit(rng);

    const auto n = static_cast<Eigen::Index>(run.result.trace.size());
    Eigen::MatrixXd x(n, 4);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x.row(i) = space.to_unit(run.result.trace[static_cast<std::size_t>(i)].params).transpose();
      y(i) = run.result.trace[static_cast<std::size_t>(i)].loss;
    }

    Eigen::Index pick = 0;
    try {
      const GaussianProcess gp = GaussianProcess::fit(x, y, rng);
      Eigen::VectorXd mean, sd;
      gp.predict(candidates, mean, sd);
      const double best = y.minCoeff();
      double best_ei = -1.0;
      for (Eigen::Index c = 0; c < candidates.rows(); ++c) {
        const double ei = expected_improvement(mean(c), sd(c), best);
        if (ei > best_ei) {
          best_ei = ei;
          pick = c;
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::IllConditioned) throw;
      std::clog << "gp_optimize: iteration " << it << ": " << e.what() << "; using a random point\n";
      ++run.result.gp_fallbacks;
      pick = 0;
    }
    run.record(candidates.row(pick).transpose());
  }
  return std::move(run.result);
}

OptimizationResult random_search(const SearchSpace& space, const OptimizerOptions& options,
                                 const Objective& objective) {
  check_options(space, options, 1);
  Rng rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Runner run{space, options, objective, {}};
  for (Eigen::Index it = 0; it < options.budget; ++it) {
    Eigen::Vector4d u;
    for (int d = 0; d < 4; ++d) u(d) = unit(rng);
    run.record(u);
  }
  return std::move(run.result);
}

void write_trace_csv(const OptimizationResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "iteration,sigma,spectral_radius,leak,ridge_beta,loss,best_loss,k\n";
  char buf[32];
  const auto g = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const auto& e = result.trace[i];
    out << i << ',' << g(e.params.sigma) << ',' << g(e.params.spectral_radius) << ',' << g(e.params.leak) << ','
        << g(e.params.ridge_beta) << ',' << g(e.loss) << ',' << g(result.running_best[i]) << ',' << e.k << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<EvalPoint> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<EvalPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(std::strtod(cell.c_str(), nullptr));
    if (cells.size() != 8) throw Error(ErrorKind::Io, path.string() + ": malformed trace row");
    out.push_back({{cells[1], cells[2], cells[3], cells[4]}, cells[5], static_cast<Eigen::Index>(cells[7])});
  }
  return out;
}

void write_best_params_json(const HyperPoint& p, const std::filesystem::path& path) {
  nlohmann::json j = {
      {"sigma", p.sigma}, {"spectral_radius", p.spectral_radius}, {"leak", p.leak}, {"ridge_beta", p.ridge_beta}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

HyperPoint read_best_params_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    return {j.at("sigma").get<double>(), j.at("spectral_radius").get<double>(), j.at("leak").get<double>(),
            j.at("ridge_beta").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
  }
}

}  // namespace esn
