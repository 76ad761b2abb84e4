#include "esn/metrics.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>

using namespace esn;

namespace {

Eigen::MatrixXd unit_variance_target() {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd t(400, 3);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = g(rng);
  t.array() -= t.mean();
  t /= std::sqrt(t.squaredNorm() / static_cast<double>(t.size()));
  return t;
}

std::vector<AccuracyRecord> records_of(std::initializer_list<double> logs) {
  std::vector<AccuracyRecord> out;
  std::uint64_t seed = 0;
  for (double l : logs) out.push_back(std::isfinite(l) ? make_record(seed++, std::pow(10.0, l), 100)
                                                       : diverged_record(seed++, 100));
  return out;
}

}  // namespace

TEST(Nrmse, EqualIsZero) {
  const Eigen::MatrixXd t = unit_variance_target();
  EXPECT_EQ(nrmse(t, t), 0.0);
}

TEST(Nrmse, ConstantOffsetOnUnitVariance) {
  const Eigen::MatrixXd t = unit_variance_target();
  const Eigen::MatrixXd p = t.array() + 0.1;
  EXPECT_NEAR(nrmse(p, t), 0.1, 1e-12);
}

TEST(Nrmse, ScaleInvariance) {
  const Eigen::MatrixXd t = unit_variance_target();
  const Eigen::MatrixXd p = t + 0.05 * Eigen::MatrixXd::Random(t.rows(), t.cols());
  const double base = nrmse(p, t);
  for (double k : {3.7, -2.0, 1e-3, 1e4}) {
    const Eigen::MatrixXd kp = k * p, kt = k * t;
    EXPECT_NEAR(nrmse(kp, kt), base, 1e-12 * base);
    EXPECT_NEAR(nrmse(kp, kt, NrmseNormalization::Range), nrmse(p, t, NrmseNormalization::Range), 1e-12);
  }
}

TEST(Nrmse, ZeroOnlyWhenEqual) {
  const Eigen::MatrixXd t = unit_variance_target();
  Eigen::MatrixXd p = t;
  p(17, 2) = std::nextafter(p(17, 2), 10.0);
  EXPECT_GT(nrmse(p, t), 0.0);
}

TEST(Nrmse, RangeNormalization) {
  Eigen::MatrixXd t(4, 1), p(4, 1);
  t << 0, 1, 2, 4;
  p << 1, 2, 3, 5;
  EXPECT_NEAR(nrmse(p, t, NrmseNormalization::Range), 0.25, 1e-15);
  EXPECT_NEAR(rmse(p, t), 1.0, 1e-15);
  EXPECT_EQ(parse_normalization("range"), NrmseNormalization::Range);
  EXPECT_EQ(to_string(NrmseNormalization::Std), "std");
  EXPECT_THROW(parse_normalization("max"), Error);
}

TEST(Nrmse, Errors) {
  const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(5, 2, 3.0);
  try {
    nrmse(c, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedNormalization);
  }
  EXPECT_THROW(nrmse(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(2, 3)), Error);
}

TEST(Nrmse, TimeSeriesOverload) {
  const Eigen::MatrixXd t = unit_variance_target();
  const TimeSeries ts(t, 0.01), ps(Eigen::MatrixXd(t.array() + 0.1), 0.01);
  EXPECT_NEAR(nrmse(ps, ts), 0.1, 1e-12);
}

TEST(Records, LogIsConsistent) {
  const AccuracyRecord r = make_record(4, 1e-4, 10000);
  EXPECT_EQ(r.seed, 4u);
  EXPECT_NEAR(r.log10_nrmse, -4.0, 1e-12);
  EXPECT_FALSE(r.diverged);
  const AccuracyRecord d = diverged_record(5, 10000);
  EXPECT_TRUE(d.diverged);
  EXPECT_TRUE(std::isinf(d.nrmse));
}

TEST(Histogram, DirectCount) {
  const auto recs = records_of({-4, -4, -2});
  const Histogram h = histogram(recs, 2);
  ASSERT_EQ(h.counts.size(), 2u);
  EXPECT_EQ(h.counts[0], 2);
  EXPECT_EQ(h.counts[1], 1);
  EXPECT_EQ(h.edges.front(), -4.0);
  EXPECT_EQ(h.edges.back(), -2.0);
  EXPECT_NEAR(h.mode(), -3.5, 1e-12);
}

TEST(Histogram, SingleRecord) {
  const auto recs = records_of({-3.2});
  const Histogram h = histogram(recs, 5);
  EXPECT_EQ(std::count_if(h.counts.begin(), h.counts.end(), [](auto c) { return c > 0; }), 1);
  for (std::size_t i = 1; i < h.edges.size(); ++i) EXPECT_GT(h.edges[i], h.edges[i - 1]);
}

TEST(Histogram, ConservationWithExclusions) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto recs = records_of({-4.1, inf, -3.9, -2.2, inf, -5.0, -3.3});
  const Histogram h = histogram(recs, 3);
  Eigen::Index total = h.excluded;
  for (auto c : h.counts) total += c;
  EXPECT_EQ(h.excluded, 2);
  EXPECT_EQ(total, 7);
  EXPECT_EQ(h.edges.size(), 4u);
}

TEST(Histogram, AllDivergedIsEmptyData) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto recs = records_of({inf, inf});
  try {
    histogram(recs, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyData);
  }
}

TEST(Sweep, DeterministicAndOrdered) {
  const RealizationTrial trial = [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return make_record(seed, std::uniform_real_distribution<double>(1e-5, 1e-3)(rng), 50);
  };
  const auto a = realization_sweep(trial, 6, 10);
  const auto b = realization_sweep(trial, 6, 10);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].seed, 10 + i);
    EXPECT_EQ(a[i].nrmse, b[i].nrmse);
  }
  const auto one = realization_sweep(trial, 1, 3);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].nrmse, trial(3).nrmse);
}

TEST(Sweep, NumericalFailuresBecomeDivergedRecords) {
  const RealizationTrial trial = [](std::uint64_t seed) -> AccuracyRecord {
    if (seed == 1) throw Error(ErrorKind::PredictionDivergence, "boom", 12);
    if (seed == 2) throw Error(ErrorKind::IllConditioned, "singular");
    return make_record(seed, 1e-3, 50);
  };
  const auto recs = realization_sweep(trial, 4, 0);
  EXPECT_FALSE(recs[0].diverged);
  EXPECT_TRUE(recs[1].diverged);
  EXPECT_TRUE(recs[2].diverged);
  EXPECT_FALSE(recs[3].diverged);

  const RealizationTrial broken = [](std::uint64_t) -> AccuracyRecord {
    throw Error(ErrorKind::InvalidConfig, "bad config");
  };
  EXPECT_THROW(realization_sweep(broken, 2, 0), Error);
  EXPECT_THROW(realization_sweep(trial, 0, 0), Error);
}

TEST(Median, OddEvenAndInfinite) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(median({-4.0, inf, -3.0}), -3.0);
  EXPECT_THROW(median({}), Error);
}

TEST(MetricsIo, RecordsCsvRoundTrip) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto recs = records_of({-4.25, inf, -1.0 / 3.0});
  const auto path = std::filesystem::temp_directory_path() / "esn_records.csv";
  write_records_csv(recs, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "seed,nrmse,log10_nrmse,n_steps,diverged");
  const auto back = read_records_csv(path);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].seed, recs[i].seed);
    EXPECT_EQ(back[i].diverged, recs[i].diverged);
    EXPECT_EQ(back[i].nrmse, recs[i].nrmse);
    EXPECT_EQ(back[i].n_steps, recs[i].n_steps);
  }
}

TEST(MetricsIo, HistogramJson) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto recs = records_of({-4, -4, -2, inf});
  const auto path = std::filesystem::temp_directory_path() / "esn_hist.json";
  write_histogram_json(histogram(recs, 2), path);
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("counts"), nlohmann::json({2, 1}));
  EXPECT_EQ(j.at("excluded"), 1);
  EXPECT_EQ(j.at("edges").size(), 3u);
}
