#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "pocfuse/model/denoise.hpp"
#include "pocfuse/numerics/adam.hpp"

namespace pocfuse {

struct TrainResult {
  ModelParameters params;
  std::vector<double> losses;  // one per optimizer step
};

// Called after every step with (1-based step, batch loss); returning false
// stops training.
using StepCallback = std::function<bool(std::size_t, double)>;

inline num::AdamConfig adam_config(const ModelConfig& config) {
  num::AdamConfig a;
  a.peak_lr = config.peak_lr;
  a.warmup_steps = config.warmup_steps;
  return a;
}

// config.epochs passes over `corpus` in seeded shuffled order, batches of
// config.batch_size (the last one may be short), fresh masks every step.
inline TrainResult train(const std::vector<EncodedInstance>& corpus, ModelParameters params,
                         const ModelConfig& config, const StepCallback& on_step = {}) {
  config.validate();
  if (corpus.empty()) throw DataError("training corpus is empty");
  std::seed_seq shuffle_seed{config.seed, std::uint64_t{1}};
  std::seed_seq mask_seed{config.seed, std::uint64_t{2}};
  std::mt19937_64 shuffle_rng(shuffle_seed);
  std::mt19937_64 mask_rng(mask_seed);

  num::OptimizerState state;
  state.config = adam_config(config);
  std::vector<num::Tensor*> tensors = params.tensors();
  TrainResult result;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EncodedInstance> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        batch.push_back(corpus[order[i]]);
      LossAndGradients lg = denoise_batch(batch, params, config, mask_rng);
      num::adam_step(tensors, lg.gradients, state);
      result.losses.push_back(lg.loss);
      if (on_step && !on_step(result.losses.size(), lg.loss)) {
        result.params = std::move(params);
        return result;
      }
    }
  }
  result.params = std::move(params);
  return result;
}

inline TrainResult train(const std::vector<EncodedInstance>& corpus, const ModelConfig& config,
                         const StepCallback& on_step = {}) {
  return train(corpus, init_parameters(config), config, on_step);
}

}  // namespace pocfuse
