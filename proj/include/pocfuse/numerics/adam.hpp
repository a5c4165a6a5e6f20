#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pocfuse/error.hpp"
#include "pocfuse/numerics/tensor.hpp"

namespace pocfuse::num {

struct AdamConfig {
  double peak_lr = 1e-3;
  std::int64_t warmup_steps = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment accumulators are aligned by index with the parameter list handed to
// adam_step; the first call sizes them.
struct OptimizerState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// Linear ramp to the peak over `warmup_steps`, constant afterwards. `step` is
// 1-based (the step being taken).
inline double warmup_learning_rate(const AdamConfig& config, std::int64_t step) {
  if (config.warmup_steps <= 0) return config.peak_lr;
  const double ramp = static_cast<double>(step) / static_cast<double>(config.warmup_steps);
  return config.peak_lr * std::min(1.0, ramp);
}

// One bias-corrected Adam update. A parameter whose gradient is entirely zero
// is treated as having no gradient this step: neither it nor its moments move.
inline void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                      OptimizerState& state) {
  if (params.size() != grads.size())
    throw InvariantError("adam_step: parameter and gradient counts differ");
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.emplace_back(p->shape(), 0.0);
      state.second_moment.emplace_back(p->shape(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size())
    throw InvariantError("adam_step: optimizer state tracks a different parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i]) || !params[i]->same_shape(state.first_moment[i]))
      throw InvariantError("adam_step: shape mismatch for parameter " + std::to_string(i) + " " +
                           shape_string(params[i]->shape()) + " vs " +
                           shape_string(grads[i].shape()));
  }

  const std::int64_t step = ++state.step;
  const AdamConfig& c = state.config;
  const double lr = warmup_learning_rate(c, step);
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = grads[i];
    if (std::all_of(g.values().begin(), g.values().end(), [](double v) { return v == 0.0; }))
      continue;
    Tensor& p = *params[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace pocfuse::num
