#pragma once

#include <functional>
#include <utility>

#include "tatc/mlp.hpp"

namespace tatc::nn {

/// Loss evaluated at the given parameters, together with its analytic gradient.
using LossWithGrad = std::function<std::pair<double, Tensors>(const Tensors&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;
  Eigen::Index worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Denominator floor of the relative error. Central differences of an O(1)
/// loss carry round-off near 1e-11, so entries whose true gradient is zero
/// would otherwise report errors of order 1e-3.
inline constexpr double kGradCheckFloor = 1e-6;

/// Compares the analytic gradient against central differences. The relative
/// error of one entry is |a - n| / max(|a|, |n|, kGradCheckFloor).
GradCheckReport grad_check(const LossWithGrad& loss_fn, const Tensors& params, double eps = 1e-5);

}  // namespace tatc::nn
