#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "pocfuse/corpus/types.hpp"
#include "pocfuse/corpus/vocabulary.hpp"
#include "pocfuse/error.hpp"
#include "pocfuse/markup.hpp"

namespace pocfuse {

inline constexpr std::size_t kDefaultMaxLen = 128;

// The concatenated sequence S = source ++ summary the model consumes.
//
// Layout: [BOS] A [SEP] B [SEP] summary [EOS]. The source region is
// [0, source_len) and ends with the second SEP; the summary region,
// including EOS, is [source_len, ids.size()).
struct EncodedInstance {
  std::vector<int> ids;
  std::vector<int> segments;
  std::size_t source_len = 0;
  PocIndexSequence z;  // one entry per source position; all zero unless sharerepr

  std::size_t summary_begin() const { return source_len; }
  std::size_t summary_end() const { return ids.size(); }
  std::size_t size() const { return ids.size(); }
};

// A PoC kept for encoding, with its marker index 1..kMaxPocMarkers.
struct SelectedPoc {
  int marker = 1;
  const PoC* poc = nullptr;
};

// Keeps at most `limit` PoCs, preferring those with more mentions (ties to the
// lower poc_id), and assigns marker indices in poc_id order.
inline std::vector<SelectedPoc> select_pocs(const std::vector<PoC>& pocs,
                                            int limit = kMaxPocMarkers) {
  std::vector<const PoC*> order;
  for (const PoC& p : pocs) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(), [](const PoC* x, const PoC* y) {
    if (x->mentions.size() != y->mentions.size()) return x->mentions.size() > y->mentions.size();
    return x->poc_id < y->poc_id;
  });
  if (order.size() > static_cast<std::size_t>(limit)) order.resize(limit);
  std::sort(order.begin(), order.end(),
            [](const PoC* x, const PoC* y) { return x->poc_id < y->poc_id; });
  std::vector<SelectedPoc> out;
  for (std::size_t i = 0; i < order.size(); ++i) out.push_back({static_cast<int>(i) + 1, order[i]});
  return out;
}

namespace detail {

inline std::vector<TaggedSpan> mentions_in(const std::vector<SelectedPoc>& pocs, SentenceId sentence,
                                           bool use_marker_index) {
  std::vector<TaggedSpan> out;
  for (const SelectedPoc& sp : pocs)
    for (const Mention& m : sp.poc->mentions)
      if (m.sentence == sentence)
        out.push_back({use_marker_index ? sp.marker : sp.poc->poc_id, m.span});
  std::sort(out.begin(), out.end(),
            [](const TaggedSpan& x, const TaggedSpan& y) { return x.span < y.span; });
  return out;
}

inline std::size_t encoded_length(std::size_t kept, const std::vector<TaggedSpan>& mentions,
                                  bool with_markers) {
  if (!with_markers) return kept;
  std::size_t n = kept;
  for (const auto& m : mentions)
    if (m.span.end <= kept) n += 2;
  return n;
}

// Longest token prefix whose encoded length fits `target` without cutting
// through a mention; partially covered mentions are dropped whole.
inline std::size_t fitting_prefix(std::size_t length, const std::vector<TaggedSpan>& mentions,
                                  std::size_t target, bool with_markers) {
  for (std::size_t k = std::min(length, target) + 1; k-- > 0;) {
    const bool splits = std::any_of(mentions.begin(), mentions.end(), [k](const TaggedSpan& m) {
      return m.span.start < k && k < m.span.end;
    });
    if (!splits && encoded_length(k, mentions, with_markers) <= target) return k;
  }
  return 0;
}

inline std::vector<TaggedSpan> kept_mentions(const std::vector<TaggedSpan>& mentions,
                                             std::size_t kept) {
  std::vector<TaggedSpan> out;
  for (const auto& m : mentions)
    if (m.span.end <= kept) out.push_back(m);
  return out;
}

// Splits `budget` across regions proportionally to their lengths; regions that
// already fit keep everything. A non-empty region at index `min_one` is never
// squeezed to zero.
inline std::array<std::size_t, 3> allocate(const std::array<std::size_t, 3>& lengths,
                                           std::size_t budget, int min_one) {
  const std::size_t total = lengths[0] + lengths[1] + lengths[2];
  if (total <= budget) return lengths;
  std::array<std::size_t, 3> targets{};
  std::size_t used = 0;
  for (int r = 0; r < 3; ++r) {
    targets[r] = lengths[r] * budget / total;
    used += targets[r];
  }
  for (bool progress = true; used < budget && progress;) {
    progress = false;
    for (int r = 0; r < 3 && used < budget; ++r)
      if (targets[r] < lengths[r]) {
        ++targets[r];
        ++used;
        progress = true;
      }
  }
  if (min_one >= 0 && lengths[min_one] > 0 && targets[min_one] == 0) {
    const int donor = targets[0] >= targets[1] ? 0 : 1;
    if (targets[donor] > 0) --targets[donor];
    targets[min_one] = 1;
  }
  return targets;
}

inline EncodedInstance encode_parts(const Tokens& a, const Tokens& b, const std::vector<PoC>& pocs,
                                    const Tokens* summary, std::size_t summary_reserve,
                                    const Vocabulary& vocab, Variant variant,
                                    std::size_t max_len) {
  if (vocab.size() < static_cast<std::size_t>(Vocabulary::kReservedCount))
    throw DataError("vocabulary is missing reserved tokens");
  if (max_len < 5) throw UsageError("max_len must be at least 5");
  const bool linking = variant == Variant::linking;
  const auto selected = select_pocs(pocs);
  const auto mentions_a = mentions_in(selected, SentenceId::a, linking);
  const auto mentions_b = mentions_in(selected, SentenceId::b, linking);

  const std::size_t reserved = summary ? 4 : 3;
  const std::array<std::size_t, 3> lengths = {
      encoded_length(a.size(), mentions_a, linking), encoded_length(b.size(), mentions_b, linking),
      summary ? summary->size() : summary_reserve};
  const auto targets = allocate(lengths, max_len - reserved, summary ? 2 : -1);

  const std::size_t keep_a = fitting_prefix(a.size(), mentions_a, targets[0], linking);
  const std::size_t keep_b = fitting_prefix(b.size(), mentions_b, targets[1], linking);
  const auto kept_a = kept_mentions(mentions_a, keep_a);
  const auto kept_b = kept_mentions(mentions_b, keep_b);
  const Tokens part_a(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(keep_a));
  const Tokens part_b(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(keep_b));

  EncodedInstance enc;
  auto push = [&](int id, int segment) {
    enc.ids.push_back(id);
    enc.segments.push_back(segment);
  };
  auto push_tokens = [&](const Tokens& tokens) {
    for (const auto& t : tokens) push(vocab.id(t), 0);
  };
  push(Vocabulary::kBos, 0);
  push_tokens(linking ? insert_poc_markers(part_a, kept_a) : part_a);
  push(Vocabulary::kSep, 0);
  push_tokens(linking ? insert_poc_markers(part_b, kept_b) : part_b);
  push(Vocabulary::kSep, 0);
  enc.source_len = enc.ids.size();

  if (variant == Variant::sharerepr) {
    std::vector<TaggedSpan> shifted;
    for (const auto& m : kept_a) shifted.push_back({m.poc, {1 + m.span.start, 1 + m.span.end}});
    const std::size_t b_offset = 2 + keep_a;
    for (const auto& m : kept_b)
      shifted.push_back({m.poc, {b_offset + m.span.start, b_offset + m.span.end}});
    enc.z = build_poc_index_sequence(enc.source_len, shifted);
  } else {
    enc.z.assign(enc.source_len, 0);
  }

  if (summary) {
    const std::size_t keep_s = std::min(summary->size(), targets[2]);
    for (std::size_t i = 0; i < keep_s; ++i) push(vocab.id((*summary)[i]), 1);
    push(Vocabulary::kEos, 1);
  }
  return enc;
}

}  // namespace detail

inline EncodedInstance encode_instance(const FusionInstance& inst, const Vocabulary& vocab,
                                       Variant variant, std::size_t max_len = kDefaultMaxLen) {
  if (inst.summary.empty()) throw DataError("instance '" + inst.id + "' has an empty summary");
  return detail::encode_parts(inst.sentence_a, inst.sentence_b, inst.pocs, &inst.summary, 0, vocab,
                              variant, max_len);
}

// Source region only, for generation. `summary_reserve` summary positions are
// budgeted when the source has to be truncated.
inline EncodedInstance encode_source(const Tokens& a, const Tokens& b, const std::vector<PoC>& pocs,
                                     const Vocabulary& vocab, Variant variant,
                                     std::size_t max_len = kDefaultMaxLen,
                                     std::size_t summary_reserve = 32) {
  return detail::encode_parts(a, b, pocs, nullptr, std::max<std::size_t>(summary_reserve, 1), vocab,
                              variant, max_len);
}

struct DecodedRegions {
  Tokens sentence_a;
  Tokens sentence_b;
  Tokens summary;
};

// Maps ids back to tokens, dropping BOS/SEP/EOS and marker tokens.
inline DecodedRegions decode_regions(const EncodedInstance& enc, const Vocabulary& vocab) {
  DecodedRegions out;
  int seps = 0;
  for (std::size_t i = 0; i < enc.ids.size(); ++i) {
    const int id = enc.ids[i];
    if (id == Vocabulary::kSep) {
      ++seps;
      continue;
    }
    if (Vocabulary::is_reserved(id) && id != Vocabulary::kUnk && id != Vocabulary::kMask) continue;
    Tokens& target = i >= enc.source_len ? out.summary : seps == 0 ? out.sentence_a : out.sentence_b;
    target.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace pocfuse
