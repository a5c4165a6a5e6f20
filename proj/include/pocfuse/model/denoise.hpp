#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "pocfuse/corpus/encode.hpp"
#include "pocfuse/model/transformer.hpp"

namespace pocfuse {

// An encoded instance with some summary positions replaced by MASK.
struct MaskedInstance {
  EncodedInstance input;
  std::vector<int> positions;  // ascending
  std::vector<int> targets;    // original ids at `positions`
};

// round(rate * summary_len), but never fewer than one.
inline std::size_t masked_count(std::size_t summary_len, double rate) {
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(summary_len)));
  return std::clamp<std::size_t>(k, 1, summary_len);
}

// Picks masked_count(...) summary positions (EOS included) uniformly without
// replacement and replaces them with MASK.
inline MaskedInstance mask_summary(const EncodedInstance& enc, double rate, std::mt19937_64& rng) {
  const std::size_t begin = enc.summary_begin(), end = enc.summary_end();
  if (end <= begin) throw DataError("cannot mask an instance without summary tokens");
  std::vector<int> candidates(end - begin);
  std::iota(candidates.begin(), candidates.end(), static_cast<int>(begin));
  const std::size_t k = masked_count(candidates.size(), rate);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  MaskedInstance out{enc, {candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k)}, {}};
  std::sort(out.positions.begin(), out.positions.end());
  for (int p : out.positions) {
    out.targets.push_back(enc.ids[p]);
    out.input.ids[p] = Vocabulary::kMask;
  }
  return out;
}

// Mean cross-entropy over every masked position of the batch.
inline num::Var denoise_loss(const BoundParameters& params,
                             std::span<const MaskedInstance> batch, const ModelConfig& config) {
  if (batch.empty()) throw InvariantError("denoise_loss on an empty batch");
  std::size_t count = 0;
  num::Var total{};
  bool first = true;
  for (const MaskedInstance& m : batch) {
    num::Var hidden = forward(params, m.input, config);
    num::Var logits = output_logits(num::gather_rows(hidden, m.positions), params);
    num::Var nll = num::cross_entropy_sum(logits, m.targets);
    total = first ? nll : num::add(total, nll);
    first = false;
    count += m.positions.size();
  }
  return num::scale(total, 1.0 / static_cast<double>(count));
}

struct LossAndGradients {
  double loss = 0.0;
  std::vector<num::Tensor> gradients;  // aligned with ModelParameters::named()
};

inline LossAndGradients loss_and_gradients(std::span<const MaskedInstance> batch,
                                           const ModelParameters& params,
                                           const ModelConfig& config) {
  num::Tape tape;
  const BoundParameters bound = bind(tape, params);
  num::Var loss = denoise_loss(bound, batch, config);
  tape.backward(loss);
  LossAndGradients out;
  out.loss = loss.value()[0];
  for (const auto& [name, t] : params.named()) out.gradients.push_back(tape.gradient(*t));
  return out;
}

// Samples fresh masks for `batch` and returns the loss and its gradients.
inline LossAndGradients denoise_batch(std::span<const EncodedInstance> batch,
                                      const ModelParameters& params, const ModelConfig& config,
                                      std::mt19937_64& rng) {
  std::vector<MaskedInstance> masked;
  masked.reserve(batch.size());
  for (const EncodedInstance& enc : batch) masked.push_back(mask_summary(enc, config.mask_rate, rng));
  return loss_and_gradients(masked, params, config);
}

}  // namespace pocfuse
