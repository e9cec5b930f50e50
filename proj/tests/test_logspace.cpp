#include "tokspace/logspace.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace tokspace {
namespace {

long double direct_log_sum(const std::vector<double>& xs) {
  long double s = 0.0L;
  for (double x : xs) s += std::exp(static_cast<long double>(x));
  return std::log(s);
}

TEST(LogSumExp, EmptyIsLogZero) {
  EXPECT_EQ(log_sum_exp(std::vector<double>{}), kLogZero);
  EXPECT_EQ(pairwise_log_sum_exp(std::vector<double>{}), kLogZero);
  LogSumExp acc;
  EXPECT_TRUE(acc.empty());
  EXPECT_EQ(acc.value(), kLogZero);
}

TEST(LogSumExp, AllNegativeInfinity) {
  const std::vector<double> xs{kLogZero, kLogZero};
  EXPECT_EQ(log_sum_exp(xs), kLogZero);
  EXPECT_EQ(pairwise_log_sum_exp(xs), kLogZero);
}

TEST(LogSumExp, MatchesDirectSumOnModerateValues) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(1 + trial % 37);
    for (auto& x : xs) x = d(rng);
    const double expected = static_cast<double>(direct_log_sum(xs));
    EXPECT_NEAR(log_sum_exp(xs), expected, 1e-12);
    EXPECT_NEAR(pairwise_log_sum_exp(xs), expected, 1e-12);
  }
}

TEST(LogSumExp, NoUnderflowFarFromZero) {
  const std::vector<double> xs{-1000.0, -1000.0};
  EXPECT_NEAR(log_sum_exp(xs), -1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> ys{800.0, 800.0, 800.0};
  EXPECT_NEAR(log_sum_exp(ys), 800.0 + std::log(3.0), 1e-12);
}

TEST(LogSumExp, RunningMaxRescaleAndMerge) {
  LogSumExp a, b;
  a.add(-3.0);
  a.add(5.0);
  b.add(-700.0);
  b.add(4.0);
  a.merge(b);
  const std::vector<double> all{-3.0, 5.0, -700.0, 4.0};
  EXPECT_NEAR(a.value(), static_cast<double>(direct_log_sum(all)), 1e-12);
}

TEST(LogSumExp, ManySmallTermsKeepPrecision) {
  // 10^6 equal terms: log(10^6) + x exactly up to rounding.
  std::vector<double> xs(1000000, -20.0);
  EXPECT_NEAR(log_sum_exp(xs), -20.0 + std::log(1e6), 1e-10);
  EXPECT_NEAR(pairwise_log_sum_exp(xs), -20.0 + std::log(1e6), 1e-10);
}

TEST(LogMeanExp, IsLogOfMean) {
  const std::vector<double> xs{std::log(1.0), std::log(2.0), std::log(6.0)};
  EXPECT_NEAR(log_mean_exp(xs), std::log(3.0), 1e-14);
}

TEST(LogAdd, Basics) {
  EXPECT_NEAR(log_add(std::log(0.25), std::log(0.5)), std::log(0.75), 1e-15);
  EXPECT_EQ(log_add(kLogZero, -2.0), -2.0);
  EXPECT_EQ(log_add(kLogZero, kLogZero), kLogZero);
}

TEST(EffectiveSampleSize, MatchesProbabilitySpaceFormula) {
  const std::vector<double> w{0.5, 1.0, 2.0, 0.1};
  double s = 0, s2 = 0;
  std::vector<double> logs;
  for (double x : w) {
    s += x;
    s2 += x * x;
    logs.push_back(std::log(x));
  }
  EXPECT_NEAR(effective_sample_size(logs), s * s / s2, 1e-12);
}

TEST(EffectiveSampleSize, EqualWeightsGiveN) {
  const std::vector<double> logs(64, -1234.5);
  EXPECT_NEAR(effective_sample_size(logs), 64.0, 1e-9);
}

TEST(EffectiveSampleSize, ZeroWeightsIgnored) {
  const std::vector<double> logs{kLogZero, 0.0, kLogZero};
  EXPECT_NEAR(effective_sample_size(logs), 1.0, 1e-12);
}

}  // namespace
}  // namespace tokspace
