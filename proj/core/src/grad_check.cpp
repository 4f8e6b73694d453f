#include "tatc/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace tatc::nn {

GradCheckReport grad_check(const LossWithGrad& loss_fn, const Tensors& params, double eps) {
  const auto [value, analytic] = loss_fn(params);
  (void)value;
  if (analytic.size() != params.size()) throw ShapeError("grad_check: gradient count mismatch");

  GradCheckReport report;
  Tensors probe = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (analytic[k].size() != params[k].size()) {
      throw ShapeError("grad_check: gradient shape mismatch");
    }
    for (Eigen::Index i = 0; i < params[k].size(); ++i) {
      const double saved = probe[k].data()[i];
      probe[k].data()[i] = saved + eps;
      const double up = loss_fn(probe).first;
      probe[k].data()[i] = saved - eps;
      const double down = loss_fn(probe).first;
      probe[k].data()[i] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      const double err = std::abs(a - numeric) / denom;
      if (err > report.max_relative_error) {
        report = {err, k, i, a, numeric};
      }
    }
  }
  return report;
}

}  // namespace tatc::nn
