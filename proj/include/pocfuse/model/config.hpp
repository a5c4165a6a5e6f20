#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "pocfuse/attention.hpp"
#include "pocfuse/corpus/encode.hpp"
#include "pocfuse/corpus/types.hpp"
#include "pocfuse/error.hpp"

namespace pocfuse {

struct ModelConfig {
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 128;
  std::size_t vocab_size = 0;
  std::size_t max_len = kDefaultMaxLen;
  Variant variant = Variant::baseline;
  // Layer of the PoC head, 0-based; -1 selects ceil(layers / 2) in 1-based
  // terms, i.e. the middle of the stack.
  int poc_layer = -1;
  std::size_t poc_head = 0;
  PocMaskMode poc_mask_mode = PocMaskMode::prose;
  double mask_rate = 0.7;
  std::uint64_t seed = 1;
  double peak_lr = 1e-3;
  std::int64_t warmup_steps = 100;
  std::size_t batch_size = 8;
  std::size_t epochs = 100;
  double init_std = 0.02;

  std::size_t poc_layer_index() const {
    if (poc_layer >= 0) return static_cast<std::size_t>(poc_layer);
    return (layers + 1) / 2 - 1;
  }

  void validate() const {
    if (layers == 0 || heads == 0) throw UsageError("layers and heads must be positive");
    if (d_model % heads != 0) throw UsageError("d_model must be divisible by heads");
    if (d_ff == 0) throw UsageError("d_ff must be positive");
    if (vocab_size < static_cast<std::size_t>(Vocabulary::kReservedCount))
      throw UsageError("vocab_size must cover the reserved tokens");
    if (max_len < 5) throw UsageError("max_len must be at least 5");
    if (!(mask_rate > 0.0 && mask_rate <= 1.0)) throw UsageError("mask_rate must be in (0, 1]");
    if (poc_layer_index() >= layers) throw UsageError("poc_layer out of range");
    if (poc_head >= heads) throw UsageError("poc_head out of range");
    if (batch_size == 0) throw UsageError("batch_size must be positive");
    if (!(peak_lr > 0.0)) throw UsageError("peak_lr must be positive");
    if (warmup_steps < 0) throw UsageError("warmup_steps must be non-negative");
    if (!(init_std >= 0.0)) throw UsageError("init_std must be non-negative");
  }
};

inline std::string_view to_string(PocMaskMode m) {
  return m == PocMaskMode::prose ? "prose" : "literal";
}

}  // namespace pocfuse
