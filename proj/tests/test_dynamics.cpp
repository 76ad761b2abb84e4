#include "esn/dynamics.hpp"
#include "esn/time_series.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace esn;

namespace {

double exp_error(double dt) {
  Eigen::Matrix<double, 1, 1> x;
  x << 1.0;
  const auto f = [](const Eigen::Matrix<double, 1, 1>& s) { return s; };
  const int n = static_cast<int>(std::lround(1.0 / dt));
  for (int i = 0; i < n; ++i) x = rk4_step(f, x, dt);
  return std::abs(x(0) - std::exp(1.0));
}

double harmonic_error(double dt) {
  Eigen::Vector2d x(1.0, 0.0);
  const auto f = [](const Eigen::Vector2d& s) { return Eigen::Vector2d(-s(1), s(0)); };
  const int n = static_cast<int>(std::lround(1.0 / dt));
  for (int i = 0; i < n; ++i) x = rk4_step(f, x, dt);
  return (x - Eigen::Vector2d(std::cos(1.0), std::sin(1.0))).norm();
}

CoupledSystemSpec rossler_pair(double c_drive, double eps) {
  CoupledSystemSpec s;
  s.drive = RosslerParams{0.2, 0.2, c_drive};
  s.epsilon = eps;
  return s;
}

CoupledSystemSpec lorenz_rossler(double rho, double eps) {
  CoupledSystemSpec s;
  s.drive = LorenzParams{10.0, rho, 8.0 / 3.0};
  s.epsilon = eps;
  return s;
}

}  // namespace

TEST(Rk4, ConstantFieldLeavesStateUnchanged) {
  const auto zero = [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); };
  const Eigen::Vector2d x = rk4_step(zero, Eigen::Vector2d(1.0, 2.0), 0.01);
  EXPECT_EQ(x, Eigen::Vector2d(1.0, 2.0));
}

TEST(Rk4, ExponentialOracle) { EXPECT_LT(exp_error(0.01), 1e-9); }

TEST(Rk4, HarmonicOracle) { EXPECT_LT(harmonic_error(0.001), 1e-10); }

TEST(Rk4, FourthOrderConvergence) {
  for (double dt : {0.1, 0.05, 0.025}) {
    const double r_exp = exp_error(dt) / exp_error(dt / 2);
    const double r_osc = harmonic_error(dt) / harmonic_error(dt / 2);
    EXPECT_GE(r_exp, 12.0) << dt;
    EXPECT_LE(r_exp, 20.0) << dt;
    EXPECT_GE(r_osc, 12.0) << dt;
    EXPECT_LE(r_osc, 20.0) << dt;
  }
}

TEST(Rk4, NonFiniteResultCarriesStepIndex) {
  const auto bad = [](const Eigen::Vector2d&) {
    return Eigen::Vector2d(std::numeric_limits<double>::quiet_NaN(), 0.0);
  };
  try {
    rk4_step(bad, Eigen::Vector2d(1.0, 1.0), 0.01, 42);
    FAIL() << "expected IntegrationBlowup";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IntegrationBlowup);
    ASSERT_TRUE(e.step().has_value());
    EXPECT_EQ(*e.step(), 42u);
  }
}

TEST(SimulateCoupled, IdenticalUncoupledSystemsStayIdentical) {
  const TimeSeries s = simulate_coupled(rossler_pair(5.7, 0.0), 5000, 0.01);
  EXPECT_EQ(s.values().leftCols(3), s.values().rightCols(3));
}

TEST(SimulateCoupled, ColumnLabelsAndShape) {
  const TimeSeries s = simulate_coupled(lorenz_rossler(28.0, 0.3), 10, 0.01);
  EXPECT_EQ(s.steps(), 10);
  EXPECT_EQ(s.dims(), 6);
  const std::vector<std::string> expected{"x_d", "y_d", "z_d", "x_r", "y_r", "z_r"};
  EXPECT_EQ(s.labels(), expected);
  EXPECT_EQ(s.values()(0, 0), 1.0);
}

TEST(SimulateCoupled, RosslerDriveC18StaysBounded) {
  const TimeSeries s = simulate_coupled(rossler_pair(18.0, 0.3), 70000, 0.01);
  // z spikes reach ~120 at c = 18.
  EXPECT_LT(s.values().cwiseAbs().maxCoeff(), 250.0);
}

TEST(SimulateCoupled, CanonicalRosslerRegressionBound) {
  const TimeSeries s = simulate_coupled(rossler_pair(5.7, 0.0), 100000, 0.01);
  const auto& v = s.values();
  EXPECT_LT(v.col(0).cwiseAbs().maxCoeff(), 50.0);
  EXPECT_LT(v.col(1).cwiseAbs().maxCoeff(), 50.0);
  EXPECT_GT(v.col(2).minCoeff(), -1.0);
  EXPECT_LT(v.col(2).maxCoeff(), 200.0);
}

TEST(SimulateCoupled, DriveIgnoresCouplingBitwise) {
  for (const auto& make : {rossler_pair, lorenz_rossler}) {
    const double p = make == rossler_pair ? 18.0 : 38.0;
    const TimeSeries coupled = simulate_coupled(make(p, 0.3), 20000, 0.01, 500);
    const TimeSeries free = simulate_coupled(make(p, 0.0), 20000, 0.01, 500);
    EXPECT_TRUE((coupled.values().leftCols(3).array() == free.values().leftCols(3).array()).all());
  }
}

TEST(SimulateCoupled, DriveIgnoresResponsePerturbationBitwise) {
  CoupledSystemSpec a = lorenz_rossler(32.0, 0.3);
  CoupledSystemSpec b = a;
  b.initial_state[3] += 0.5;
  b.initial_state[5] -= 0.25;
  const TimeSeries sa = simulate_coupled(a, 20000, 0.01);
  const TimeSeries sb = simulate_coupled(b, 20000, 0.01);
  EXPECT_TRUE((sa.values().leftCols(3).array() == sb.values().leftCols(3).array()).all());
  EXPECT_FALSE((sa.values().rightCols(3).array() == sb.values().rightCols(3).array()).all());
}

TEST(SimulateCoupled, Deterministic) {
  const TimeSeries a = simulate_coupled(rossler_pair(10.0, 0.3), 3000, 0.01, 100);
  const TimeSeries b = simulate_coupled(rossler_pair(10.0, 0.3), 3000, 0.01, 100);
  EXPECT_TRUE((a.values().array() == b.values().array()).all());
}

TEST(SimulateCoupled, DivergenceReportsStep) {
  CoupledSystemSpec s = rossler_pair(5.7, 0.3);
  s.drive = RosslerParams{3.0, 0.2, 5.7};  // a > 2 makes the x-y plane unstable
  try {
    simulate_coupled(s, 100000, 0.01);
    FAIL() << "expected IntegrationBlowup";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IntegrationBlowup);
    EXPECT_TRUE(e.step().has_value());
  }
}

TEST(SimulateCoupled, RejectsBadArguments) {
  EXPECT_THROW(simulate_coupled(rossler_pair(5.7, 0.3), 1, 0.01), Error);
  EXPECT_THROW(simulate_coupled(rossler_pair(5.7, 0.3), 10, 0.0), Error);
}

TEST(DrivenResponse, AgreesWithCoupledIntegration) {
  const TimeSeries s = simulate_coupled(lorenz_rossler(38.0, 0.3), 5000, 0.01, 1000);
  const Eigen::VectorXd z = s.values().col(kDriveZ);
  const Eigen::Vector3d r0 = s.values().row(0).tail<3>().transpose();
  const TimeSeries r = simulate_driven_response(z, 0.01, RosslerParams{}, 0.3, r0);
  // Midpoint drive values are interpolated, so agreement is O(dt^4) in z_d''''.
  EXPECT_LT((r.values() - s.values().rightCols(3)).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(ScaleDrive, IdentityScaling) {
  const TimeSeries s = simulate_coupled(rossler_pair(10.0, 0.3), 500, 0.01);
  static constexpr int cols[] = {0, 1, 2};
  const TimeSeries out = scale_drive(s, cols, 1.0, 1.0);
  EXPECT_EQ(out.steps(), s.steps());
  EXPECT_TRUE((out.values().array() == s.values().array()).all());
}

TEST(ScaleDrive, PureAmplitude) {
  Eigen::MatrixXd v(50, 2);
  v.col(0).setConstant(2.0);
  v.col(1).setLinSpaced(50, 0.0, 1.0);
  static constexpr int cols[] = {0};
  const TimeSeries out = scale_drive(TimeSeries(v, 0.01), cols, 0.7, 1.0);
  for (Eigen::Index i = 0; i < out.steps(); ++i) EXPECT_NEAR(out.values()(i, 0), 1.4, 1e-15);
  EXPECT_EQ(out.values().col(1), v.col(1));
}

TEST(ScaleDrive, FrequencyScalingOfSinusoid) {
  const Eigen::Index n = 5000;
  Eigen::MatrixXd v(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) v(i, 0) = std::sin(0.01 * static_cast<double>(i));
  static constexpr int cols[] = {0};
  const TimeSeries out = scale_drive(TimeSeries(v, 0.01), cols, 1.0, 1.3);
  EXPECT_EQ(out.steps(), static_cast<Eigen::Index>(std::floor((n - 1) / 1.3)) + 1);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < out.steps(); ++i)
    worst = std::max(worst, std::abs(out.values()(i, 0) - std::sin(1.3 * 0.01 * static_cast<double>(i))));
  EXPECT_LT(worst, 1e-3);
}

TEST(ScaleDrive, SlowingDownKeepsLength) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Random(100, 2);
  static constexpr int cols[] = {0};
  const TimeSeries out = scale_drive(TimeSeries(v, 0.01), cols, 1.0, 0.7);
  EXPECT_EQ(out.steps(), 100);
  EXPECT_EQ(out.values()(0, 0), v(0, 0));
  EXPECT_NEAR(out.values()(10, 0), v(7, 0), 1e-15);
}

TEST(ScaleDrive, Errors) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Random(3, 2);
  static constexpr int cols[] = {0};
  static constexpr int bad[] = {4};
  const TimeSeries s(v, 0.01);
  for (const auto& call : {+[](const TimeSeries& t) { return scale_drive(t, cols, 0.0, 1.0); },
                           +[](const TimeSeries& t) { return scale_drive(t, cols, 1.0, -1.0); },
                           +[](const TimeSeries& t) { return scale_drive(t, cols, 1.0, 5.0); },
                           +[](const TimeSeries& t) { return scale_drive(t, bad, 1.0, 1.0); }}) {
    try {
      call(s);
      ADD_FAILURE() << "expected InvalidScaling";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidScaling);
    }
  }
}

TEST(TimeSeriesType, Invariants) {
  EXPECT_THROW(TimeSeries(Eigen::MatrixXd::Zero(1, 2), 0.01), Error);
  EXPECT_THROW(TimeSeries(Eigen::MatrixXd::Zero(3, 2), 0.0), Error);
  Eigen::MatrixXd nan = Eigen::MatrixXd::Zero(3, 2);
  nan(1, 1) = std::nan("");
  EXPECT_THROW(TimeSeries(nan, 0.01), Error);
  EXPECT_THROW(TimeSeries(Eigen::MatrixXd::Zero(3, 2), 0.01, {"a"}), Error);
}

TEST(TimeSeriesType, CsvRoundTripIsExact) {
  const TimeSeries s = simulate_coupled(lorenz_rossler(28.0, 0.3), 200, 0.01);
  const auto path = std::filesystem::temp_directory_path() / "esn_ts_roundtrip.csv";
  write_csv(s, path);
  EXPECT_TRUE(std::filesystem::exists(sidecar_path(path)));
  const TimeSeries back = read_csv(path);
  EXPECT_EQ(back.dt(), s.dt());
  EXPECT_EQ(back.labels(), s.labels());
  EXPECT_TRUE((back.values().array() == s.values().array()).all());
}

TEST(TimeSeriesType, SelectAndSlice) {
  const TimeSeries s = simulate_coupled(lorenz_rossler(28.0, 0.3), 20, 0.01);
  static constexpr int cols[] = {2, 5};
  const TimeSeries sel = s.select_columns(cols).slice_rows(3, 4);
  EXPECT_EQ(sel.dims(), 2);
  EXPECT_EQ(sel.steps(), 4);
  EXPECT_EQ(sel.labels()[0], "z_d");
  EXPECT_EQ(sel.values()(0, 1), s.values()(3, 5));
}
