#include "tatc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace tatc::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

TTest welch_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_greater: need 2+ values per side");
  const double va = sd(a) * sd(a) / static_cast<double>(a.size());
  const double vb = sd(b) * sd(b) / static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  TTest out;
  if (va + vb == 0.0) {
    // Both samples constant: the ordering is certain either way.
    out.t = diff > 0 ? std::numeric_limits<double>::infinity()
                     : (diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
    out.df = static_cast<double>(a.size() + b.size() - 2);
    out.p = diff > 0 ? 0.0 : 1.0;
    return out;
  }
  out.t = diff / std::sqrt(va + vb);
  out.df = (va + vb) * (va + vb) /
           (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(out.df);
  out.p = boost::math::cdf(boost::math::complement(dist, out.t));
  return out;
}

Interval ci95(std::span<const double> x) {
  const double m = mean(x);
  const double half = 1.959963984540054 * sd(x) / std::sqrt(static_cast<double>(x.size()));
  return {m - half, m + half};
}

}  // namespace tatc::stats
