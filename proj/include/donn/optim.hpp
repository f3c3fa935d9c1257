#pragma once

#include "donn/grad.hpp"

namespace donn {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer state.
struct OptimState {
  AdamConfig config;
  GradientSet first_moment;
  GradientSet second_moment;
  std::uint64_t step = 0;

  static OptimState create(const DonnModel& model, AdamConfig config = {});
};

/// One bias-corrected Adam update of every phase value in place.
void optim_step(DonnModel& model, const GradientSet& grads, OptimState& state);

}  // namespace donn
