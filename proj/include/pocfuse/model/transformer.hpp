#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pocfuse/attention.hpp"
#include "pocfuse/corpus/encode.hpp"
#include "pocfuse/model/config.hpp"
#include "pocfuse/model/parameters.hpp"
#include "pocfuse/numerics/functions.hpp"
#include "pocfuse/numerics/tape.hpp"

namespace pocfuse {

// Receives (layer, head, alpha) for every attention head evaluated.
using LayerAttentionObserver =
    std::function<void(std::size_t, std::size_t, const num::Tensor&)>;

// The per-head masks of one layer: every head uses the seq2seq mask except the
// PoC head of a sharerepr model in its configured layer.
struct LayerMasks {
  AttentionMask base;
  AttentionMask poc;
  bool has_poc_head = false;
};

inline LayerMasks build_masks(const EncodedInstance& enc, const ModelConfig& config) {
  LayerMasks masks;
  masks.base = build_seq2seq_mask(enc.source_len, enc.size());
  if (config.variant == Variant::sharerepr) {
    masks.poc = build_poc_head_mask(masks.base, enc.z, enc.source_len, enc.size(),
                                    config.poc_mask_mode);
    masks.has_poc_head = true;
  }
  return masks;
}

// Final hidden states H^L, one row per position of `enc`.
//
// embeddings = token + position + segment, then per layer:
//   x = LayerNorm(x + MultiHeadAttention(x))
//   x = LayerNorm(x + W2 GeLU(W1 x + b1) + b2)
inline num::Var forward(const BoundParameters& params, const EncodedInstance& enc,
                        const ModelConfig& config,
                        const LayerAttentionObserver* observer = nullptr) {
  const std::size_t n = enc.size();
  if (n == 0) throw InvariantError("forward on an empty sequence");
  if (n > config.max_len)
    throw DataError("sequence of length " + std::to_string(n) + " exceeds max_len " +
                    std::to_string(config.max_len));
  if (enc.segments.size() != n || enc.z.size() != enc.source_len)
    throw InvariantError("malformed encoded instance");
  std::vector<int> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<int>(i);

  num::Var x = num::add(num::add(num::embedding(params.token_embedding, enc.ids),
                                 num::embedding(params.position_embedding, positions)),
                        num::embedding(params.segment_embedding, enc.segments));

  const LayerMasks masks = build_masks(enc, config);
  const std::size_t poc_layer = config.poc_layer_index();
  std::vector<const AttentionMask*> head_masks(config.heads, &masks.base);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const BoundLayer& layer = params.layers[l];
    head_masks.assign(config.heads, &masks.base);
    if (masks.has_poc_head && l == poc_layer) head_masks[config.poc_head] = &masks.poc;

    AttentionObserver head_observer;
    if (observer)
      head_observer = [&](std::size_t h, const num::Tensor& alpha) { (*observer)(l, h, alpha); };
    num::Var attended = multi_head_attention(x, head_masks, layer.attention,
                                             observer ? &head_observer : nullptr);
    x = num::layer_norm(num::add(x, attended), layer.ln1_gain, layer.ln1_bias);
    num::Var ff = num::add_bias(
        num::matmul(num::gelu(num::add_bias(num::matmul(x, layer.ff_w1), layer.ff_b1)), layer.ff_w2),
        layer.ff_b2);
    x = num::layer_norm(num::add(x, ff), layer.ln2_gain, layer.ln2_bias);
  }
  return x;
}

// Vocabulary logits W^O GeLU(W^h h) for each row of `hidden`, with W^O the
// token embedding table.
inline num::Var output_logits(num::Var hidden, const BoundParameters& params) {
  return num::matmul_bt(num::gelu(num::matmul(hidden, params.head_transform)),
                        params.token_embedding);
}

// o = softmax(W^O GeLU(W^h h)) for a single hidden vector.
inline std::vector<double> output_distribution(std::span<const double> hidden,
                                               const ModelParameters& params) {
  num::Tape tape(num::Tape::Mode::inference);
  const BoundParameters bound = bind(tape, params);
  auto h = tape.constant(num::Tensor({1, hidden.size()}, {hidden.begin(), hidden.end()}));
  const num::Tensor& logits = output_logits(h, bound).value();
  std::vector<double> zero_mask(logits.size(), 0.0);
  return num::softmax_masked(logits.values(), zero_mask);
}

// Log-probabilities over the vocabulary at the last position of `enc`.
inline std::vector<double> next_token_log_probs(const EncodedInstance& enc,
                                                const ModelParameters& params,
                                                const ModelConfig& config) {
  num::Tape tape(num::Tape::Mode::inference);
  const BoundParameters bound = bind(tape, params);
  num::Var hidden = forward(bound, enc, config);
  num::Var last = num::gather_rows(hidden, {static_cast<int>(enc.size() - 1)});
  return num::log_softmax(output_logits(last, bound).value().values());
}

}  // namespace pocfuse
