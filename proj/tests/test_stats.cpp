#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rvmdh/report.hpp"
#include "rvmdh/simulator.hpp"
#include "rvmdh/stats.hpp"
#include "test_support.hpp"

using namespace rvmdh;
using rvmdh::testing::normal_sample;

namespace {

// Leave-one-out by explicit copy-and-erase; independent of the in-place walk
// used by jackknife_se.
double jackknife_oracle(const std::vector<double>& x, Statistic stat) {
  const std::size_t n = x.size();
  std::vector<double> theta;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sub = x;
    sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(i));
    theta.push_back(evaluate(stat, sub));
  }
  const double tbar = std::accumulate(theta.begin(), theta.end(), 0.0) / n;
  double ss = 0.0;
  for (double t : theta) ss += (t - tbar) * (t - tbar);
  return std::sqrt((n - 1.0) / n * ss);
}

}  // namespace

TEST(SampleStd, Examples) {
  EXPECT_DOUBLE_EQ(sample_std(std::vector<double>{-1.0, 1.0}), std::sqrt(2.0));
  EXPECT_EQ(sample_std(std::vector<double>(10, 4.2)), 0.0);
  try {
    sample_std(std::vector<double>{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(SampleStd, NormalSample) {
  std::mt19937_64 rng(51);
  const auto x = normal_sample(rng, 870);
  EXPECT_NEAR(sample_std(x), 1.0, 3.0 / std::sqrt(2.0 * 870));
}

TEST(Kurtosis, TwoPointDistributionIsOne) {
  std::vector<double> x;
  for (int i = 0; i < 100; ++i) x.push_back(i % 2 ? 1.0 : -1.0);
  EXPECT_DOUBLE_EQ(kurtosis(x), 1.0);
}

TEST(Kurtosis, Errors) {
  EXPECT_THROW(kurtosis(std::vector<double>{1, 2, 3}), Error);
  try {
    kurtosis(std::vector<double>(8, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
  }
}

TEST(Kurtosis, NormalAndStudentT) {
  std::mt19937_64 rng(52);
  const std::size_t n = 20000;
  const auto x = normal_sample(rng, n);
  EXPECT_NEAR(kurtosis(x), 3.0, 3.0 * std::sqrt(24.0 / n));

  std::student_t_distribution<double> t5(5.0);
  std::vector<double> y(200000);
  for (auto& v : y) v = t5(rng);
  EXPECT_GT(kurtosis(y), 6.0);  // analytic value 9
}

TEST(Moments, AffineInvariance) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::exponential_distribution<double> ex(1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> x(30 + rep);
    for (auto& v : x) v = ex(rng);
    double a = coef(rng);
    if (std::abs(a) < 0.1) a = 0.7;
    const double b = coef(rng);
    std::vector<double> y(x);
    for (auto& v : y) v = a * v + b;
    EXPECT_NEAR(kurtosis(y), kurtosis(x), 1e-10 * kurtosis(x));
    EXPECT_NEAR(sample_std(y), std::abs(a) * sample_std(x), 1e-10 * sample_std(y));
    EXPECT_GE(kurtosis(x), 1.0);
  }
}

TEST(Jackknife, ThreePointHandEnumeration) {
  // theta = (1/sqrt2, sqrt2, 1/sqrt2): SE = sqrt(2/3 * 1/3).
  EXPECT_NEAR(jackknife_se(std::vector<double>{0.0, 1.0, 2.0}, Statistic::StdDev), std::sqrt(2.0) / 3.0, 1e-15);
}

TEST(Jackknife, OutlierSeriesMatchesEnumeration) {
  std::vector<double> x(40, 1.0);
  x[17] = 9.0;
  for (auto stat : {Statistic::StdDev})
    EXPECT_NEAR(jackknife_se(x, stat), jackknife_oracle(x, stat), 1e-14);
  x[3] = 0.0;  // kurtosis defined on every subsample once two points differ from the rest
  for (auto stat : {Statistic::StdDev, Statistic::Kurtosis})
    EXPECT_NEAR(jackknife_se(x, stat), jackknife_oracle(x, stat), 1e-12);
}

TEST(Jackknife, MatchesEnumerationOnRandomSamples) {
  std::mt19937_64 rng(54);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = normal_sample(rng, 10 + rep * 7);
    for (auto stat : {Statistic::StdDev, Statistic::Kurtosis}) {
      const double a = jackknife_se(x, stat);
      EXPECT_EQ(a, jackknife_oracle(x, stat));
      EXPECT_EQ(a, jackknife_se(x, stat));
    }
    auto shuffled = x;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_NEAR(jackknife_se(shuffled, Statistic::StdDev), jackknife_se(x, Statistic::StdDev), 1e-12);
  }
}

TEST(Jackknife, StdErrorOfNormalSample) {
  std::mt19937_64 rng(55);
  const std::size_t n = 1000;
  const auto x = normal_sample(rng, n);
  const double asym = 1.0 / std::sqrt(2.0 * n);
  EXPECT_NEAR(jackknife_se(x, Statistic::StdDev), asym, 0.25 * asym);
}

TEST(Jackknife, DegenerateSubsample) {
  std::vector<double> x(10, 2.0);
  x[4] = 3.0;
  EXPECT_THROW(jackknife_se(x, Statistic::Kurtosis), Error);
  EXPECT_THROW(jackknife_se(std::vector<double>{1, 2}, Statistic::StdDev), Error);
}

TEST(BiasCorrectedStd, Examples) {
  EXPECT_NEAR(bias_corrected_std(0.915, 0.141), 0.977381, 1e-6);
  EXPECT_NEAR(bias_corrected_std(0.787, 0.316), 0.902823, 1e-6);
  EXPECT_EQ(bias_corrected_std(0.8, 0.0), 0.8);
  try {
    bias_corrected_std(0.9, -0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
  for (double d : {1e-9, 0.1, 0.5, 2.0}) EXPECT_GT(bias_corrected_std(0.9, d), 0.9);
}

TEST(AndersonDarling, MatchesReferenceStatistic) {
  const std::vector<double> x{0.31, -1.2, 0.55, 2.1, -0.4, 0.05, 1.3, -0.9, -2.2, 0.7, 0.12, -0.33};
  const auto r = anderson_darling(x);
  // Reference A^2 for this sample (sample mean, n-1 std).
  EXPECT_NEAR(r.statistic, 0.1405256658084948, 1e-12);
  EXPECT_NEAR(r.adjusted, 0.15150423344978345, 1e-12);
  EXPECT_NEAR(r.p_value, 0.9611580997533102, 1e-10);
  EXPECT_FALSE(r.clamped);
}

TEST(AndersonDarling, PValueMonotoneWithinBranches) {
  const double edges[] = {0.0, 0.2, 0.34, 0.6, 153.0};
  for (int b = 0; b < 4; ++b) {
    double prev = 2.0;
    for (double a = edges[b]; a < edges[b + 1]; a += (edges[b + 1] - edges[b]) / 500.0) {
      const double p = ad_p_value(a);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_LE(p, prev) << a;
      prev = p;
    }
  }
  EXPECT_EQ(ad_p_value(1000.0), 0.0);
}

TEST(AndersonDarling, UniformIsRejected) {
  std::mt19937_64 rng(56);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(500);
  for (auto& v : x) v = u(rng);
  EXPECT_LT(anderson_darling(x).p_value, 0.01);
}

TEST(AndersonDarling, Errors) {
  try {
    anderson_darling(std::vector<double>(20, 1.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
  }
  EXPECT_THROW(anderson_darling(std::vector<double>{1, 2, 3, 4, 5, 6, 7}), Error);
}

TEST(AndersonDarling, ExtremeOutlierIsClampedAndFlagged) {
  std::vector<double> x(2000, 0.0);
  x[0] = 1.0;
  const auto r = anderson_darling(x);
  EXPECT_TRUE(r.clamped);
  EXPECT_TRUE(std::isfinite(r.statistic));
  EXPECT_EQ(r.p_value, 0.0);
}

TEST(Acf, LagZeroAndAlternating) {
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(i % 2 ? -1.0 : 1.0);
  const auto r = acf(x, 3);
  EXPECT_EQ(r.acf[0], 1.0);
  EXPECT_DOUBLE_EQ(r.acf[1], -999.0 / 1000.0);
  EXPECT_DOUBLE_EQ(r.acf[2], 998.0 / 1000.0);
  EXPECT_DOUBLE_EQ(r.band, 1.96 / std::sqrt(1000.0));
  for (double v : r.acf) EXPECT_LE(std::abs(v), 1.0);
}

TEST(Acf, Errors) {
  EXPECT_THROW(acf(std::vector<double>(30, 1.0), 5), Error);
  EXPECT_THROW(acf(std::vector<double>{1, 2, 3}, 3), Error);
  EXPECT_THROW(acf(std::vector<double>{1, 2, 3}, 0), Error);
}

TEST(Acf, IndependentSeriesStayInsideBand) {
  std::mt19937_64 rng(57);
  double total_outside = 0.0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const auto x = normal_sample(rng, 870);
    const auto r = acf(x, 50);
    const double outside = 50.0 - lags_inside_band(r);
    EXPECT_LE(outside / 50.0, 0.15);
    total_outside += outside;
  }
  EXPECT_NEAR(total_outside / (50.0 * reps), 0.05, 0.015);
}

namespace {

ReturnSeries per_day(const std::vector<double>& v) {
  ReturnSeries r;
  for (std::size_t i = 0; i < v.size(); ++i) {
    r.days.push_back(rvmdh::testing::day(2009, 1, 1) + std::chrono::days{static_cast<int>(i)});
    r.values.push_back(v[i]);
  }
  return r;
}

RvSeries rv_of(const std::vector<double>& v) {
  RvSeries r;
  r.session = "MS";
  r.delta_minutes = 5;
  for (std::size_t i = 0; i < v.size(); ++i)
    r.entries.push_back({rvmdh::testing::day(2009, 1, 1) + std::chrono::days{static_cast<int>(i)}, v[i], 24});
  return r;
}

}  // namespace

TEST(Standardize, Examples) {
  const std::vector<double> rv{1e-4, 4e-4, 9e-4};
  const auto s = standardize(per_day({1e-2, 2e-2, 3e-2}), rv_of(rv));
  for (double v : s.values) EXPECT_DOUBLE_EQ(v, 1.0);
  const auto z = standardize(per_day({0.0, 0.0, 0.0}), rv_of(rv));
  for (double v : z.values) EXPECT_EQ(v, 0.0);
}

TEST(Standardize, ExcludesZeroRvAndUnmatchedDays) {
  const auto s = standardize(per_day({0.01, 0.02, 0.03, 0.04}), rv_of({1e-4, 0.0, 1e-4}));
  EXPECT_EQ(s.values.size(), 2u);
  EXPECT_EQ(s.excluded_zero_rv, 1u);
  EXPECT_EQ(s.excluded_unmatched, 1u);
  try {
    standardize(per_day({0.01}), rv_of({0.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptySeries);
  }
}

TEST(Standardize, MdhSimulationHasUnitStd) {
  SimConfig cfg;
  cfg.seed = 58;
  cfg.n_days = 1000;
  cfg.vol = LognormalOuVol{std::log(1.4e-3), 0.2, 0.2};
  cfg.tick_interval = 60;
  const auto sim = simulate(cfg);
  const auto s = standardize(zone_returns(sim.ticks, "MS"), rv_series(sim.ticks, "MS", 1));
  EXPECT_NEAR(sample_std(s.values), 1.0, 3.0 * jackknife_se(s.values, Statistic::StdDev));
}

TEST(MdhReport, DegenerateGaussian) {
  std::mt19937_64 rng(59);
  const auto eps = normal_sample(rng, 2000);
  StandardizedSeries s;
  s.session = "MS";
  s.values = eps;
  NoiseFit fit;
  fit.a0 = 1.0;
  fit.a1 = 0.0;
  const auto r = mdh_report(s, fit, 5);
  EXPECT_EQ(r.n, 2000u);
  EXPECT_NEAR(r.std_dev, 1.0, 3.0 * r.std_dev_se);
  EXPECT_NEAR(r.kurtosis, 3.0, 3.0 * r.kurtosis_se);
  EXPECT_EQ(r.bias_corrected_std, r.std_dev);
  EXPECT_GT(r.ad_p_value, 0.01);
}

TEST(MdhReport, BiasCorrectionScalesValueAndError) {
  std::mt19937_64 rng(60);
  StandardizedSeries s;
  s.values = normal_sample(rng, 300);
  NoiseFit fit;
  fit.a0 = 2.5e-4;
  fit.a1 = 0.705;
  const auto r = mdh_report(s, fit, 5);
  EXPECT_NEAR(r.bias, 0.141, 1e-15);
  EXPECT_DOUBLE_EQ(r.bias_corrected_std, r.std_dev * std::sqrt(1.141));
  EXPECT_DOUBLE_EQ(r.bias_corrected_std_se, r.std_dev_se * std::sqrt(1.141));
}

TEST(MdhReport, RendersStoredRow) {
  MdhReport r;
  r.std_dev = 0.915;
  r.std_dev_se = 0.032;
  r.kurtosis = 2.75;
  r.kurtosis_se = 0.13;
  r.bias = 0.141;
  r.bias_corrected_std = bias_corrected_std(r.std_dev, r.bias);
  r.bias_corrected_std_se = bias_corrected_std(r.std_dev_se, r.bias);
  r.ad_p_value = 0.310;
  MomentSummary raw{0.0158, 0.0020, 4.99, 0.50, 870};
  const auto table = format_mdh_table({"MS"}, {raw}, {r});
  EXPECT_NE(table.find("0.915(32)"), std::string::npos) << table;
  EXPECT_NE(table.find("2.75(13)"), std::string::npos) << table;
  EXPECT_NE(table.find("0.977(34)"), std::string::npos) << table;
  EXPECT_NE(table.find("1.58(20)"), std::string::npos) << table;
  EXPECT_NE(table.find("4.99(50)"), std::string::npos) << table;
  EXPECT_NE(table.find("0.310"), std::string::npos) << table;
}

TEST(Format, ValueError) {
  EXPECT_EQ(format_value_error(0.915, 0.032), "0.915(32)");
  EXPECT_EQ(format_value_error(24.8, 14.4), "24.8(144)");
  EXPECT_EQ(format_value_error(1.007, 0.033), "1.01(3)");
  EXPECT_EQ(format_value(0.97737), "0.977");
}
