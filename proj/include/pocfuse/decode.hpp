#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

#include "pocfuse/corpus/encode.hpp"
#include "pocfuse/corpus/vocabulary.hpp"
#include "pocfuse/model/config.hpp"
#include "pocfuse/model/parameters.hpp"
#include "pocfuse/model/transformer.hpp"

namespace pocfuse {

inline constexpr std::size_t kDefaultMaxOutLen = 32;

// Log-probabilities over the vocabulary for the token following `prefix`.
using StepFunction = std::function<std::vector<double>(std::span<const int>)>;

// Tokens the decoder may emit: everything except PAD, UNK, BOS, SEP, MASK and
// the PoC markers. EOS is allowed and terminates generation.
inline std::vector<bool> generation_allowed(std::size_t vocab_size) {
  std::vector<bool> allowed(vocab_size, true);
  for (int id = 0; id < Vocabulary::kReservedCount && id < static_cast<int>(vocab_size); ++id)
    allowed[id] = id == Vocabulary::kEos;
  return allowed;
}

struct Hypothesis {
  std::vector<int> tokens;  // without EOS
  double log_prob = 0.0;
  std::size_t steps = 0;  // generation steps taken, EOS included
  bool finished = false;

  // Length-normalized score: summed log-probability per generated token.
  double score() const { return steps == 0 ? 0.0 : log_prob / static_cast<double>(steps); }
};

// Argmax decoding; ties go to the lowest token id.
inline std::vector<int> greedy_search(const StepFunction& step, const std::vector<bool>& allowed,
                                      int eos, std::size_t max_out_len) {
  std::vector<int> out;
  while (out.size() < max_out_len) {
    const std::vector<double> lp = step(out);
    int best = -1;
    for (std::size_t id = 0; id < lp.size() && id < allowed.size(); ++id)
      if (allowed[id] && (best < 0 || lp[id] > lp[best])) best = static_cast<int>(id);
    if (best < 0 || best == eos) break;
    out.push_back(best);
  }
  return out;
}

// Beam search. Each step expands every live hypothesis by every allowed token
// and keeps the `beam_width` best expansions by summed log-probability;
// expansions ending in EOS retire into the finished pool. Hypotheses still
// live at max_out_len join the pool unterminated. The pool's best
// length-normalized score wins; ties go to the hypothesis retired first.
inline Hypothesis beam_search(const StepFunction& step, const std::vector<bool>& allowed, int eos,
                              std::size_t max_out_len, std::size_t beam_width) {
  if (beam_width == 0) throw UsageError("beam width must be at least 1");
  std::vector<Hypothesis> live(1);
  std::vector<Hypothesis> pool;
  struct Candidate {
    double log_prob;
    std::size_t parent;
    int token;
  };
  for (std::size_t t = 0; t < max_out_len && !live.empty(); ++t) {
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const std::vector<double> lp = step(live[h].tokens);
      for (std::size_t id = 0; id < lp.size() && id < allowed.size(); ++id)
        if (allowed[id]) candidates.push_back({live[h].log_prob + lp[id], h, static_cast<int>(id)});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& x, const Candidate& y) { return x.log_prob > y.log_prob; });
    if (candidates.size() > beam_width) candidates.resize(beam_width);
    std::vector<Hypothesis> next;
    for (const Candidate& c : candidates) {
      Hypothesis h = live[c.parent];
      h.log_prob = c.log_prob;
      h.steps = t + 1;
      if (c.token == eos) {
        h.finished = true;
        pool.push_back(std::move(h));
      } else {
        h.tokens.push_back(c.token);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }
  for (Hypothesis& h : live) pool.push_back(std::move(h));
  if (pool.empty()) return {};
  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i)
    if (pool[i].score() > pool[best].score()) best = i;
  return pool[best];
}

// Trained model plus everything needed to run it.
struct FusionModel {
  const ModelParameters* params = nullptr;
  ModelConfig config;
  const Vocabulary* vocabulary = nullptr;
};

namespace detail {

struct PreparedSource {
  EncodedInstance source;
  std::size_t max_steps = 0;
};

inline PreparedSource prepare_source(const Tokens& a, const Tokens& b, const std::vector<PoC>& pocs,
                                     const FusionModel& model, std::size_t max_out_len) {
  PreparedSource p;
  p.source = encode_source(a, b, pocs, *model.vocabulary, model.config.variant,
                           model.config.max_len, max_out_len);
  p.max_steps = std::min(max_out_len, model.config.max_len - p.source.size());
  return p;
}

// The next summary position holds MASK; its output distribution predicts the
// token for that position.
inline StepFunction model_step(const EncodedInstance& source, const FusionModel& model) {
  return [&source, &model](std::span<const int> prefix) {
    EncodedInstance enc = source;
    for (int id : prefix) {
      enc.ids.push_back(id);
      enc.segments.push_back(1);
    }
    enc.ids.push_back(Vocabulary::kMask);
    enc.segments.push_back(1);
    return next_token_log_probs(enc, *model.params, model.config);
  };
}

inline Tokens to_tokens(const std::vector<int>& ids, const Vocabulary& vocab) {
  Tokens out;
  for (int id : ids) out.push_back(vocab.token(id));
  return out;
}

}  // namespace detail

inline Tokens greedy_fuse(const Tokens& a, const Tokens& b, const std::vector<PoC>& pocs,
                          const FusionModel& model, std::size_t max_out_len = kDefaultMaxOutLen) {
  const auto prepared = detail::prepare_source(a, b, pocs, model, max_out_len);
  const auto ids = greedy_search(detail::model_step(prepared.source, model),
                                 generation_allowed(model.vocabulary->size()), Vocabulary::kEos,
                                 prepared.max_steps);
  return detail::to_tokens(ids, *model.vocabulary);
}

inline Tokens beam_fuse(const Tokens& a, const Tokens& b, const std::vector<PoC>& pocs,
                        const FusionModel& model, std::size_t beam_width,
                        std::size_t max_out_len = kDefaultMaxOutLen) {
  const auto prepared = detail::prepare_source(a, b, pocs, model, max_out_len);
  const auto best = beam_search(detail::model_step(prepared.source, model),
                                generation_allowed(model.vocabulary->size()), Vocabulary::kEos,
                                prepared.max_steps, beam_width);
  return detail::to_tokens(best.tokens, *model.vocabulary);
}

// Fusion by plain concatenation of the two sources.
inline Tokens concat_baseline(const Tokens& a, const Tokens& b) {
  Tokens out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace pocfuse
