#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tatc/stats.hpp"

namespace tatc::stats {
namespace {

// Upper tail of Student's t by Simpson integration of the density on
// [t, t + 200] after the substitution x = t + u / (1 - u).
double t_upper_tail(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  const auto f = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double x = t + u / (1.0 - u);
    return c * std::pow(1.0 + x * x / df, -(df + 1) / 2) / ((1.0 - u) * (1.0 - u));
  };
  const int n = 200000;
  const double h = 1.0 / n;
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

TEST(Ranks, TiesShareAverage) {
  const std::vector<double> x{10, 20, 20, 5, 20};
  EXPECT_EQ(average_ranks(x), (std::vector<double>{2, 4, 4, 1, 4}));
  EXPECT_EQ(average_ranks(std::vector<double>{}), (std::vector<double>{}));
}

TEST(Correlation, Examples) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 8, 16, 32};
  EXPECT_NEAR(spearman(x, y), 1.0, 1e-15);
  EXPECT_LT(pearson(x, y), 1.0);
  const std::vector<double> rev{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman(x, rev), -1.0, 1e-15);
  EXPECT_TRUE(std::isnan(spearman(x, std::vector<double>{3, 3, 3, 3, 3})));
  // Ties: ranks x = (1, 2.5, 2.5, 4), y = (1, 2, 3, 4); Pearson of the ranks.
  const std::vector<double> xt{1, 2, 2, 3};
  const std::vector<double> yt{1, 2, 3, 4};
  EXPECT_NEAR(spearman(xt, yt), 4.5 / std::sqrt(4.5 * 5.0), 1e-12);
}

TEST(Moments, MeanSd) {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean(x), 5.0);
  EXPECT_NEAR(sd(x), std::sqrt(32.0 / 7.0), 1e-12);
  EXPECT_EQ(sd(std::vector<double>{1.0}), 0.0);
}

TEST(Welch, MatchesIntegratedTail) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a(5);
    std::vector<double> b(5 + trial % 3);
    for (auto& v : a) v = 0.5 + noise(rng) * (1.0 + 0.3 * trial);
    for (auto& v : b) v = noise(rng);
    const double va = sd(a) * sd(a) / a.size();
    const double vb = sd(b) * sd(b) / b.size();
    const double t = (mean(a) - mean(b)) / std::sqrt(va + vb);
    const double df = (va + vb) * (va + vb) /
                      (va * va / (a.size() - 1.0) + vb * vb / (b.size() - 1.0));
    const auto r = welch_greater(a, b);
    EXPECT_NEAR(r.t, t, 1e-12);
    EXPECT_NEAR(r.df, df, 1e-9);
    EXPECT_NEAR(r.p, t_upper_tail(t, df), 1e-7);
  }
}

TEST(Welch, DegenerateVariance) {
  const std::vector<double> hi{1, 1, 1};
  const std::vector<double> lo{0, 0, 0};
  EXPECT_EQ(welch_greater(hi, lo).p, 0.0);
  EXPECT_EQ(welch_greater(lo, hi).p, 1.0);
  EXPECT_EQ(welch_greater(lo, lo).p, 1.0);
}

TEST(Interval, NormalApproximation) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const auto ci = ci95(x);
  const double half = 1.959963984540054 * sd(x) / std::sqrt(5.0);
  EXPECT_NEAR(ci.lo, 3.0 - half, 1e-9);
  EXPECT_NEAR(ci.hi, 3.0 + half, 1e-9);
  EXPECT_TRUE(ci.contains(3.0));
  EXPECT_FALSE(ci.contains(10.0));
}

}  // namespace
}  // namespace tatc::stats
