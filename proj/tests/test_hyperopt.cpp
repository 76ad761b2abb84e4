#include "esn/dynamics.hpp"
#include "esn/gaussian_process.hpp"
#include "esn/hyperopt.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace esn;

namespace {

Eigen::MatrixXd random_unit(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

double bumpy(const Eigen::RowVectorXd& x) {
  return std::sin(3.0 * x(0)) + 0.5 * std::cos(5.0 * x(1)) + x(2) * x(2) - 0.3 * x(3);
}

// (x - 0.3)^2 on the first unit coordinate of the space.
Objective quadratic(const SearchSpace& space, int* calls = nullptr) {
  return [space, calls](const HyperPoint& p) {
    if (calls) ++*calls;
    const double x = space.to_unit(p)(0);
    return EvalPoint{p, (x - 0.3) * (x - 0.3), 1};
  };
}

bool same_trace(const OptimizationResult& a, const OptimizationResult& b) {
  if (a.trace.size() != b.trace.size()) return false;
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    const auto &p = a.trace[i].params, &q = b.trace[i].params;
    if (p.sigma != q.sigma || p.spectral_radius != q.spectral_radius || p.leak != q.leak ||
        p.ridge_beta != q.ridge_beta || a.trace[i].loss != b.trace[i].loss)
      return false;
  }
  return true;
}

}  // namespace

TEST(GaussianProcessModel, InterpolatesObservations) {
  const Eigen::MatrixXd x = random_unit(25, 4, 3);
  Eigen::VectorXd y(25);
  for (Eigen::Index i = 0; i < 25; ++i) y(i) = bumpy(x.row(i));
  Rng rng(1);
  const GaussianProcess gp = GaussianProcess::fit(x, y, rng);
  Eigen::VectorXd mean, sd;
  gp.predict(x, mean, sd);
  EXPECT_LT((mean - y).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT(sd.maxCoeff(), 1e-2);
  const Eigen::MatrixXd far = random_unit(10, 4, 99);
  gp.predict(far, mean, sd);
  EXPECT_TRUE((sd.array() >= 0.0).all());
}

TEST(GaussianProcessModel, LikelihoodGradientMatchesFiniteDifferences) {
  const Eigen::MatrixXd x = random_unit(15, 3, 5);
  Eigen::VectorXd y(15);
  for (Eigen::Index i = 0; i < 15; ++i) y(i) = std::sin(4.0 * x(i, 0)) + x(i, 1);
  y = (y.array() - y.mean()) / std::sqrt((y.array() - y.mean()).square().mean());
  GpHyperparameters h{Eigen::Vector3d(-0.5, 0.2, 0.7), 0.1};
  Eigen::VectorXd grad;
  gp_log_marginal_likelihood(x, y, h, 1e-4, &grad);
  ASSERT_EQ(grad.size(), 4);
  const double eps = 1e-6;
  for (int k = 0; k < 4; ++k) {
    GpHyperparameters hp = h, hm = h;
    if (k < 3) {
      hp.log_length_scales(k) += eps;
      hm.log_length_scales(k) -= eps;
    } else {
      hp.log_signal_variance += eps;
      hm.log_signal_variance -= eps;
    }
    const double fd = (gp_log_marginal_likelihood(x, y, hp, 1e-4) - gp_log_marginal_likelihood(x, y, hm, 1e-4)) / (2 * eps);
    EXPECT_NEAR(grad(k), fd, 1e-4 * (1.0 + std::abs(fd))) << k;
  }
}

TEST(ExpectedImprovement, NonNegativeEverywhere) {
  Rng rng(2);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    const double sd = std::abs(g(rng)) * (i % 3 == 0 ? 0.0 : 1.0);
    EXPECT_GE(expected_improvement(g(rng), sd, g(rng)), 0.0);
  }
}

TEST(ExpectedImprovement, KnownValues) {
  EXPECT_EQ(expected_improvement(1.0, 0.0, 1.0), 0.0);
  EXPECT_EQ(expected_improvement(2.0, 0.0, 1.0), 0.0);
  EXPECT_EQ(expected_improvement(0.5, 0.0, 1.0), 0.5);
  // mean == best: EI = sd * phi(0)
  EXPECT_NEAR(expected_improvement(1.0, 2.0, 1.0), 2.0 / std::sqrt(2.0 * M_PI), 1e-12);
}

TEST(Space, UnitRoundTripAndLogBeta) {
  const SearchSpace space;
  const Eigen::Vector4d u(0.25, 0.5, 0.75, 0.5);
  const HyperPoint p = space.from_unit(u);
  EXPECT_NEAR(p.ridge_beta, std::pow(10.0, -5.5), 1e-18);
  EXPECT_NEAR(p.spectral_radius, 0.8, 1e-15);
  EXPECT_LT((space.to_unit(p) - u).cwiseAbs().maxCoeff(), 1e-12);
  const EsnParams e = p.apply_to(EsnParams{});
  EXPECT_EQ(e.leak, p.leak);
  EXPECT_EQ(e.n_nodes, 1200);
}

TEST(Space, Validation) {
  SearchSpace s;
  s.leak = {0.5, 0.5};
  EXPECT_THROW(validate(s), Error);
  s = SearchSpace{};
  s.ridge_beta = {0.0, 1.0};
  EXPECT_THROW(validate(s), Error);
  EXPECT_NO_THROW(validate(SearchSpace{}));
}

TEST(Halton, FirstPoints) {
  const Eigen::Vector4d h1 = halton_point(1), h2 = halton_point(2);
  EXPECT_EQ(h1, Eigen::Vector4d(0.5, 1.0 / 3.0, 0.2, 1.0 / 7.0));
  EXPECT_NEAR(h2(0), 0.25, 1e-15);
  EXPECT_NEAR(h2(1), 2.0 / 3.0, 1e-15);
}

TEST(GpOptimize, RecoversQuadraticMinimum) {
  const SearchSpace space;
  OptimizerOptions o;
  o.budget = 30;
  o.seed = 7;
  const OptimizationResult r = gp_optimize(space, o, quadratic(space));
  EXPECT_EQ(r.trace.size(), 30u);
  EXPECT_LT(std::abs(space.to_unit(r.best().params)(0) - 0.3), 0.05);
}

TEST(GpOptimize, BookkeepingAndReproducibility) {
  const SearchSpace space;
  OptimizerOptions o;
  o.budget = 14;
  o.seed = 3;
  const auto a = gp_optimize(space, o, quadratic(space));
  const auto b = gp_optimize(space, o, quadratic(space));
  EXPECT_TRUE(same_trace(a, b));
  ASSERT_EQ(a.running_best.size(), 14u);
  for (std::size_t i = 1; i < a.running_best.size(); ++i) EXPECT_LE(a.running_best[i], a.running_best[i - 1]);
  EXPECT_EQ(a.running_best.back(), a.best().loss);
  EXPECT_EQ(a.evaluations, 14);
}

TEST(GpOptimize, InitialDesignOnlyBudget) {
  const SearchSpace space;
  OptimizerOptions o;
  o.budget = 10;
  const auto r = gp_optimize(space, o, quadratic(space));
  EXPECT_EQ(r.trace.size(), 10u);
  EXPECT_GE(r.best_index, 0);
  o.budget = 9;
  EXPECT_THROW(gp_optimize(space, o, quadratic(space)), Error);
}

TEST(GpOptimize, ResumeSkipsCompletedEvaluations) {
  const SearchSpace space;
  OptimizerOptions full;
  full.budget = 20;
  full.seed = 11;
  int calls_full = 0;
  const auto reference = gp_optimize(space, full, quadratic(space, &calls_full));
  EXPECT_EQ(calls_full, 20);

  OptimizerOptions head = full;
  head.budget = 13;
  const auto partial = gp_optimize(space, head, quadratic(space));
  const auto path = std::filesystem::temp_directory_path() / "esn_resume_trace.csv";
  write_trace_csv(partial, path);

  OptimizerOptions resumed = full;
  resumed.resume = read_trace_csv(path);
  int calls = 0;
  const auto r = gp_optimize(space, resumed, quadratic(space, &calls));
  EXPECT_EQ(calls, 7);
  EXPECT_EQ(r.evaluations, 7);
  EXPECT_TRUE(same_trace(r, reference));

  OptimizerOptions wrong_seed = resumed;
  wrong_seed.seed = 12;
  EXPECT_THROW(gp_optimize(space, wrong_seed, quadratic(space)), Error);
}

TEST(RandomSearch, SinglePointAndSeeding) {
  const SearchSpace space;
  OptimizerOptions o;
  o.budget = 1;
  const auto one = random_search(space, o, quadratic(space));
  EXPECT_EQ(one.trace.size(), 1u);
  EXPECT_EQ(one.best_index, 0);
  o.budget = 25;
  o.seed = 5;
  EXPECT_TRUE(same_trace(random_search(space, o, quadratic(space)), random_search(space, o, quadratic(space))));
}

TEST(TraceIo, SchemaIdenticalAcrossMethods) {
  const SearchSpace space;
  OptimizerOptions o;
  o.budget = 10;
  const auto dir = std::filesystem::temp_directory_path();
  write_trace_csv(gp_optimize(space, o, quadratic(space)), dir / "esn_gp.csv");
  write_trace_csv(random_search(space, o, quadratic(space)), dir / "esn_rs.csv");
  std::string h1, h2;
  std::ifstream(dir / "esn_gp.csv") >> h1;
  std::ifstream(dir / "esn_rs.csv") >> h2;
  EXPECT_EQ(h1, h2);
  EXPECT_EQ(h1, "iteration,sigma,spectral_radius,leak,ridge_beta,loss,best_loss,k");
}

TEST(TraceIo, BestParamsRoundTrip) {
  const HyperPoint p{0.0639, 0.5057, 0.6057, 4.7487e-5};
  const auto path = std::filesystem::temp_directory_path() / "esn_best.json";
  write_best_params_json(p, path);
  const HyperPoint q = read_best_params_json(path);
  EXPECT_EQ(q.sigma, p.sigma);
  EXPECT_EQ(q.spectral_radius, p.spectral_radius);
  EXPECT_EQ(q.leak, p.leak);
  EXPECT_EQ(q.ridge_beta, p.ridge_beta);
}

namespace {

LossTask small_lorenz_task() {
  const auto spec = [](double rho) {
    CoupledSystemSpec s;
    s.drive = LorenzParams{10.0, rho, 8.0 / 3.0};
    return s;
  };
  const std::vector<CoupledSystemSpec> specs{spec(28.0), spec(32.0), spec(36.0)};
  LossTask task;
  task.base.n_nodes = 120;
  task.training.series_steps = 3000;
  task.training.spinup_steps = 1000;
  task.training.transient_steps = 300;
  task.training.series = simulate_training_series(specs, task.training);
  task.prediction.warmup_steps = 500;
  task.prediction.n_predict = 500;
  task.validation = split_task(simulate_coupled(spec(30.0), 1001, 0.01, 1000), ColumnLayout{});
  return task;
}

}  // namespace

TEST(EvaluateLoss, DeterministicAndFrozenReservoirIsWorse) {
  const LossTask task = small_lorenz_task();
  const HyperPoint good{0.0639, 0.5057, 0.6057, 4.7487e-5};
  const EvalPoint a = evaluate_loss(good, task, 2, 0);
  const EvalPoint b = evaluate_loss(good, task, 2, 0);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.k, 2);
  const EvalPoint frozen = evaluate_loss({0.0639, 0.5057, 0.0, 4.7487e-5}, task, 2, 0);
  EXPECT_GT(frozen.loss, 10.0 * a.loss);
  EXPECT_THROW(evaluate_loss(good, task, 0, 0), Error);
}
