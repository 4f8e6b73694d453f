#include "tatc/optimizer.hpp"

#include <cmath>

namespace tatc::nn {

namespace {

Tensors zeros_shaped(const Tensors& like, int copies) {
  Tensors out;
  for (int c = 0; c < copies; ++c) {
    for (const auto& t : like) out.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
  }
  return out;
}

}  // namespace

Optimizer Optimizer::rmsprop(const Tensors& like, RmsPropSettings settings) {
  if (!(settings.lr > 0.0)) throw std::invalid_argument("rmsprop: step size must be positive");
  Optimizer opt;
  opt.kind_ = OptimizerKind::kRmsProp;
  opt.rms_ = settings;
  opt.state_ = zeros_shaped(like, 1);
  return opt;
}

Optimizer Optimizer::adam(const Tensors& like, AdamSettings settings) {
  if (!(settings.lr > 0.0)) throw std::invalid_argument("adam: step size must be positive");
  Optimizer opt;
  opt.kind_ = OptimizerKind::kAdam;
  opt.adam_ = settings;
  opt.state_ = zeros_shaped(like, 2);
  return opt;
}

void Optimizer::restore(Tensors state, std::int64_t steps) {
  if (state.size() != state_.size()) throw ShapeError("optimizer: restored state has wrong size");
  for (std::size_t k = 0; k < state.size(); ++k) {
    if (state[k].rows() != state_[k].rows() || state[k].cols() != state_[k].cols()) {
      throw ShapeError("optimizer: restored accumulator has wrong shape");
    }
  }
  state_ = std::move(state);
  steps_ = steps;
}

void Optimizer::step(Tensors& params, const Tensors& grads) {
  const std::size_t n = params.size();
  const std::size_t expected = kind_ == OptimizerKind::kAdam ? 2 * n : n;
  if (grads.size() != n || state_.size() != expected) {
    throw ShapeError("optimizer: parameter/gradient/state count mismatch");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (grads[k].rows() != params[k].rows() || grads[k].cols() != params[k].cols() ||
        state_[k].rows() != params[k].rows() || state_[k].cols() != params[k].cols()) {
      throw ShapeError("optimizer: gradient shape does not match parameter shape");
    }
  }
  if (!all_finite(grads)) throw NumericError("optimizer: non-finite gradient rejected");

  ++steps_;
  if (kind_ == OptimizerKind::kRmsProp) {
    const auto& s = rms_;
    for (std::size_t k = 0; k < n; ++k) {
      auto v = state_[k].array();
      const auto g = grads[k].array();
      v = s.decay * v + (1.0 - s.decay) * g.square();
      params[k].array() -= s.lr * g / (v.sqrt() + s.eps);
    }
  } else {
    const auto& s = adam_;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < n; ++k) {
      auto m = state_[k].array();
      auto v = state_[n + k].array();
      const auto g = grads[k].array();
      m = s.beta1 * m + (1.0 - s.beta1) * g;
      v = s.beta2 * v + (1.0 - s.beta2) * g.square();
      params[k].array() -= s.lr * (m / c1) / ((v / c2).sqrt() + s.eps);
    }
  }
  if (!all_finite(params)) throw NumericError("optimizer: update produced non-finite parameters");
}

}  // namespace tatc::nn
