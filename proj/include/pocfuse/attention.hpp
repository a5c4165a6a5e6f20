#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pocfuse/error.hpp"
#include "pocfuse/markup.hpp"
#include "pocfuse/numerics/functions.hpp"
#include "pocfuse/numerics/tape.hpp"

namespace pocfuse {

// n x n additive attention mask over {0, -inf}; 0 lets row i attend to
// column j. Indices are 0-based.
class AttentionMask {
 public:
  AttentionMask() = default;
  explicit AttentionMask(std::size_t n) : n_(n), entries_(n * n, num::kNegInf) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  bool allowed(std::size_t i, std::size_t j) const { return entries_[i * n_ + j] == 0.0; }
  void allow(std::size_t i, std::size_t j) { entries_[i * n_ + j] = 0.0; }

  std::span<const double> entries() const { return entries_; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * n_, n_}; }

  void copy_row_from(const AttentionMask& other, std::size_t i) {
    std::copy(other.row(i).begin(), other.row(i).end(), entries_.begin() + i * n_);
  }

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

// Source rows attend to the whole source; summary rows attend to the source
// and to their own prefix. In 1-based terms: j <= max(i, |x|).
inline AttentionMask build_seq2seq_mask(std::size_t source_len, std::size_t total_len) {
  if (source_len < 1 || source_len > total_len)
    throw InvariantError("seq2seq mask needs 1 <= source_len <= total_len");
  AttentionMask mask(total_len);
  for (std::size_t i = 0; i < total_len; ++i) {
    const std::size_t last = std::max(i, source_len - 1);
    for (std::size_t j = 0; j <= last; ++j) mask.allow(i, j);
  }
  return mask;
}

// How rows not governed by a PoC are treated in the PoC head.
//   prose:   only rows with z_i != 0 are restricted; all other rows keep the
//            base mask.
//   literal: every source row is restricted to source columns with the same
//            z value (z = 0 tokens attend to each other); summary rows keep
//            the base mask, since the literal condition leaves them empty.
enum class PocMaskMode { prose, literal };

// Mask for the head dedicated to points of correspondence: a governed source
// row i may attend to source column j iff z_j == z_i.
inline AttentionMask build_poc_head_mask(const AttentionMask& base, const PocIndexSequence& z,
                                         std::size_t source_len, std::size_t total_len,
                                         PocMaskMode mode = PocMaskMode::prose) {
  if (z.size() != source_len) throw InvariantError("PoC index sequence length != source_len");
  if (base.size() != total_len || source_len > total_len)
    throw InvariantError("PoC head mask size mismatch");
  AttentionMask mask(total_len);
  for (std::size_t i = 0; i < total_len; ++i) {
    const bool governed = i < source_len && (z[i] != 0 || mode == PocMaskMode::literal);
    if (!governed) {
      mask.copy_row_from(base, i);
      continue;
    }
    for (std::size_t j = 0; j < source_len; ++j)
      if (z[j] == z[i]) mask.allow(i, j);
  }
  return mask;
}

// alpha = softmax_rows(q k^T / sqrt(d_k) + M)
inline num::Var attention_weights(num::Var queries, num::Var keys, const AttentionMask& mask,
                                  std::size_t d_k) {
  if (d_k == 0) throw InvariantError("attention_weights: d_k must be positive");
  if (queries.value().cols() != d_k || keys.value().cols() != d_k)
    throw InvariantError("attention_weights: vector width differs from d_k");
  auto scores = num::scale(num::matmul_bt(queries, keys), 1.0 / std::sqrt(static_cast<double>(d_k)));
  return num::masked_softmax(scores, mask.entries());
}

inline num::Tensor attention_weights(const num::Tensor& queries, const num::Tensor& keys,
                                     const AttentionMask& mask, std::size_t d_k) {
  num::Tape tape(num::Tape::Mode::inference);
  return attention_weights(tape.constant(queries), tape.constant(keys), mask, d_k).value();
}

// Per-layer attention weights as tape variables. Projections map row vectors:
// y = x W + b with W of shape d_model x d_model; keys carry no bias.
struct AttentionProjections {
  num::Var wq, bq, wk, wv, bv, wo, bo;
};

// Receives (head index, alpha) for every head evaluated.
using AttentionObserver = std::function<void(std::size_t, const num::Tensor&)>;

inline num::Var multi_head_attention(num::Var hidden, std::span<const AttentionMask* const> masks,
                                     const AttentionProjections& w,
                                     const AttentionObserver* observer = nullptr) {
  const std::size_t d_model = hidden.value().cols();
  const std::size_t heads = masks.size();
  if (heads == 0 || d_model % heads != 0)
    throw UsageError("d_model must be divisible by the number of heads");
  const std::size_t d_k = d_model / heads;
  auto q = num::add_bias(num::matmul(hidden, w.wq), w.bq);
  auto k = num::matmul(hidden, w.wk);
  auto v = num::add_bias(num::matmul(hidden, w.wv), w.bv);
  std::vector<num::Var> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    if (masks[h]->size() != hidden.value().rows())
      throw InvariantError("attention mask size differs from sequence length");
    auto alpha = attention_weights(num::slice_cols(q, h * d_k, d_k), num::slice_cols(k, h * d_k, d_k),
                                   *masks[h], d_k);
    if (observer) (*observer)(h, alpha.value());
    outputs.push_back(num::matmul(alpha, num::slice_cols(v, h * d_k, d_k)));
  }
  return num::add_bias(num::matmul(num::concat_cols(outputs), w.wo), w.bo);
}

}  // namespace pocfuse
