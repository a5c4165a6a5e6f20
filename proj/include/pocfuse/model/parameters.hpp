#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pocfuse/model/config.hpp"
#include "pocfuse/numerics/tape.hpp"
#include "pocfuse/numerics/tensor.hpp"

namespace pocfuse {

struct LayerParameters {
  num::Tensor wq, bq, wk, wv, bv, wo, bo;  // no key bias: it shifts every score in a row equally
  num::Tensor ln1_gain, ln1_bias;
  num::Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  num::Tensor ln2_gain, ln2_bias;
};

// All trainable tensors. The token embedding table doubles as the output
// projection W^O; there is no separate tensor for it.
struct ModelParameters {
  num::Tensor token_embedding;     // vocab x d_model
  num::Tensor position_embedding;  // max_len x d_model
  num::Tensor segment_embedding;   // 2 x d_model
  std::vector<LayerParameters> layers;
  num::Tensor head_transform;  // W^h, d_model x d_model

  num::Tensor& output_projection() { return token_embedding; }
  const num::Tensor& output_projection() const { return token_embedding; }

  // Stable, documented order; checkpoints and optimizer state follow it.
  std::vector<std::pair<std::string, num::Tensor*>> named() {
    std::vector<std::pair<std::string, num::Tensor*>> out = {
        {"token_embedding", &token_embedding},
        {"position_embedding", &position_embedding},
        {"segment_embedding", &segment_embedding}};
    for (std::size_t l = 0; l < layers.size(); ++l) {
      LayerParameters& p = layers[l];
      const std::string at = "layer" + std::to_string(l) + ".";
      for (auto& [name, t] : std::vector<std::pair<const char*, num::Tensor*>>{
               {"attn.wq", &p.wq}, {"attn.bq", &p.bq}, {"attn.wk", &p.wk},
               {"attn.wv", &p.wv}, {"attn.bv", &p.bv}, {"attn.wo", &p.wo}, {"attn.bo", &p.bo},
               {"ln1.gain", &p.ln1_gain}, {"ln1.bias", &p.ln1_bias}, {"ff.w1", &p.ff_w1},
               {"ff.b1", &p.ff_b1}, {"ff.w2", &p.ff_w2}, {"ff.b2", &p.ff_b2},
               {"ln2.gain", &p.ln2_gain}, {"ln2.bias", &p.ln2_bias}})
        out.emplace_back(at + name, t);
    }
    out.emplace_back("head_transform", &head_transform);
    return out;
  }

  std::vector<std::pair<std::string, const num::Tensor*>> named() const {
    std::vector<std::pair<std::string, const num::Tensor*>> out;
    for (auto& [n, t] : const_cast<ModelParameters*>(this)->named()) out.emplace_back(n, t);
    return out;
  }

  std::vector<num::Tensor*> tensors() {
    std::vector<num::Tensor*> out;
    for (auto& [n, t] : named()) out.push_back(t);
    return out;
  }

  friend bool operator==(const ModelParameters& a, const ModelParameters& b) {
    auto na = a.named(), nb = b.named();
    if (na.size() != nb.size()) return false;
    for (std::size_t i = 0; i < na.size(); ++i)
      if (na[i].first != nb[i].first || *na[i].second != *nb[i].second) return false;
    return true;
  }
};

// Weight matrices and embeddings ~ N(0, init_std) from a stream seeded by
// config.seed; biases zero; layer-norm gains one.
inline ModelParameters init_parameters(const ModelConfig& config) {
  config.validate();
  const std::size_t d = config.d_model;
  ModelParameters p;
  p.token_embedding = num::Tensor::matrix(config.vocab_size, d);
  p.position_embedding = num::Tensor::matrix(config.max_len, d);
  p.segment_embedding = num::Tensor::matrix(2, d);
  p.layers.resize(config.layers);
  for (LayerParameters& l : p.layers) {
    for (num::Tensor* w : {&l.wq, &l.wk, &l.wv, &l.wo}) *w = num::Tensor::matrix(d, d);
    for (num::Tensor* b : {&l.bq, &l.bv, &l.bo, &l.ln1_bias, &l.ln2_bias, &l.ff_b2})
      *b = num::Tensor::vector(d);
    l.ln1_gain = num::Tensor::vector(d, 1.0);
    l.ln2_gain = num::Tensor::vector(d, 1.0);
    l.ff_w1 = num::Tensor::matrix(d, config.d_ff);
    l.ff_b1 = num::Tensor::vector(config.d_ff);
    l.ff_w2 = num::Tensor::matrix(config.d_ff, d);
  }
  p.head_transform = num::Tensor::matrix(d, d);

  std::seed_seq seq{config.seed, std::uint64_t{0}};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& [name, t] : p.named()) {
    const bool random = t->rank() == 2;
    if (!random) continue;
    for (double& v : t->values()) v = config.init_std * normal(rng);
  }
  return p;
}

// Tape handles for every parameter of one forward pass.
struct BoundLayer {
  AttentionProjections attention;
  num::Var ln1_gain, ln1_bias, ff_w1, ff_b1, ff_w2, ff_b2, ln2_gain, ln2_bias;
};

struct BoundParameters {
  num::Var token_embedding, position_embedding, segment_embedding;
  std::vector<BoundLayer> layers;
  num::Var head_transform;
};

inline BoundParameters bind(num::Tape& tape, const ModelParameters& p) {
  BoundParameters b;
  b.token_embedding = tape.param(p.token_embedding);
  b.position_embedding = tape.param(p.position_embedding);
  b.segment_embedding = tape.param(p.segment_embedding);
  for (const LayerParameters& l : p.layers) {
    BoundLayer bl;
    bl.attention = {tape.param(l.wq), tape.param(l.bq), tape.param(l.wk),
                    tape.param(l.wv), tape.param(l.bv), tape.param(l.wo), tape.param(l.bo)};
    bl.ln1_gain = tape.param(l.ln1_gain);
    bl.ln1_bias = tape.param(l.ln1_bias);
    bl.ff_w1 = tape.param(l.ff_w1);
    bl.ff_b1 = tape.param(l.ff_b1);
    bl.ff_w2 = tape.param(l.ff_w2);
    bl.ff_b2 = tape.param(l.ff_b2);
    bl.ln2_gain = tape.param(l.ln2_gain);
    bl.ln2_bias = tape.param(l.ln2_bias);
    b.layers.push_back(bl);
  }
  b.head_transform = tape.param(p.head_transform);
  return b;
}

}  // namespace pocfuse
