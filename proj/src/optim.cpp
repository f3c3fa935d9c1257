#include "donn/optim.hpp"

#include <cmath>

namespace donn {

OptimState OptimState::create(const DonnModel& model, AdamConfig config) {
  return {config, GradientSet::zeros_like(model), GradientSet::zeros_like(model), 0};
}

void optim_step(DonnModel& model, const GradientSet& grads, OptimState& state) {
  if (!grads.congruent(model) || !state.first_moment.congruent(model) ||
      !state.second_moment.congruent(model)) {
    throw DimensionError("optim_step: gradient/state shapes do not match the model");
  }
  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t c = 0; c < kChannelCount; ++c) {
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
      auto theta = model.channel(c).theta(l);
      const auto& g = grads.d_theta[c][l];
      auto& m = state.first_moment.d_theta[c][l];
      auto& v = state.second_moment.d_theta[c][l];
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      }
    }
  }
}

}  // namespace donn
