#pragma once

#include <cstdint>
#include <string>

#include "tatc/mlp.hpp"

namespace tatc::nn {

struct RmsPropSettings {
  double lr = 1e-3;
  double decay = 0.99;
  double eps = 1e-8;
};

struct AdamSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

enum class OptimizerKind { kRmsProp, kAdam };

/// Per-parameter optimizer state. Accumulators mirror the parameter shapes.
class Optimizer {
 public:
  Optimizer() = default;
  static Optimizer rmsprop(const Tensors& like, RmsPropSettings settings = {});
  static Optimizer adam(const Tensors& like, AdamSettings settings = {});

  /// Applies one update in place. Rejects non-finite gradients before
  /// touching anything, and non-finite parameters after the update.
  void step(Tensors& params, const Tensors& grads);

  OptimizerKind kind() const { return kind_; }
  double lr() const { return kind_ == OptimizerKind::kAdam ? adam_.lr : rms_.lr; }
  std::int64_t step_count() const { return steps_; }

  /// Accumulators (RMSprop: second moment; Adam: first then second moment).
  const Tensors& state() const { return state_; }
  void restore(Tensors state, std::int64_t steps);

 private:
  OptimizerKind kind_ = OptimizerKind::kRmsProp;
  RmsPropSettings rms_;
  AdamSettings adam_;
  Tensors state_;
  std::int64_t steps_ = 0;
};

}  // namespace tatc::nn
