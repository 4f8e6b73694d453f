#pragma once

#include <span>
#include <vector>

namespace tatc::stats {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sd(std::span<const double> x);

/// Ranks starting at 1, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
/// NaN when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Welch test of H1: mean(a) > mean(b).
TTest welch_greater(std::span<const double> a, std::span<const double> b);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Normal-approximation 95% interval of the mean.
Interval ci95(std::span<const double> x);

}  // namespace tatc::stats
