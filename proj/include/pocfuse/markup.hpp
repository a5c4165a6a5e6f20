#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "pocfuse/corpus/types.hpp"
#include "pocfuse/corpus/vocabulary.hpp"
#include "pocfuse/error.hpp"

namespace pocfuse {

// A mention span tagged with the PoC it belongs to. For marker insertion the
// tag is the marker index k (S_k / E_k); for the index sequence it is the
// PoC id written into z.
struct TaggedSpan {
  int poc = 1;
  Span span;
  friend bool operator==(const TaggedSpan&, const TaggedSpan&) = default;
};

using PocIndexSequence = std::vector<int>;

namespace detail {

inline std::vector<TaggedSpan> sorted_checked(std::vector<TaggedSpan> spans, std::size_t length) {
  std::sort(spans.begin(), spans.end(),
            [](const TaggedSpan& x, const TaggedSpan& y) { return x.span < y.span; });
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span& s = spans[i].span;
    if (s.start >= s.end || s.end > length) throw DataError("span out of bounds");
    if (i > 0 && spans[i - 1].span.overlaps(s)) throw DataError("overlapping mentions");
  }
  return spans;
}

// Parses "[S12]" / "[E3]"; returns (is_start, k).
inline std::optional<std::pair<bool, int>> parse_marker(const std::string& token) {
  if (token.size() < 4 || token.front() != '[' || token.back() != ']') return std::nullopt;
  if (token[1] != 'S' && token[1] != 'E') return std::nullopt;
  int k = 0;
  for (std::size_t i = 2; i + 1 < token.size(); ++i) {
    if (token[i] < '0' || token[i] > '9' || k > 100000) return std::nullopt;
    k = k * 10 + (token[i] - '0');
  }
  if (k < 1) return std::nullopt;
  return std::make_pair(token[1] == 'S', k);
}

}  // namespace detail

inline bool is_marker_token(const std::string& token) {
  return detail::parse_marker(token).has_value();
}

// Wraps every mention [s, e) tagged k as S_k tokens[s:e] E_k. Mentions of the
// same PoC share one marker pair.
inline Tokens insert_poc_markers(const Tokens& tokens, std::vector<TaggedSpan> mentions) {
  mentions = detail::sorted_checked(std::move(mentions), tokens.size());
  Tokens out;
  out.reserve(tokens.size() + 2 * mentions.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (next < mentions.size() && mentions[next].span.start == i)
      out.push_back(marker_start_token(mentions[next].poc));
    out.push_back(tokens[i]);
    if (next < mentions.size() && mentions[next].span.end == i + 1)
      out.push_back(marker_end_token(mentions[next++].poc));
  }
  return out;
}

struct StrippedTokens {
  Tokens tokens;
  std::vector<TaggedSpan> mentions;
};

// Inverse of insert_poc_markers.
inline StrippedTokens strip_poc_markers(const Tokens& marked) {
  StrippedTokens out;
  std::optional<TaggedSpan> open;
  for (const std::string& token : marked) {
    auto marker = detail::parse_marker(token);
    if (!marker) {
      out.tokens.push_back(token);
      continue;
    }
    const auto [is_start, k] = *marker;
    if (is_start) {
      if (open) throw DataError("nested marker " + token);
      open = TaggedSpan{k, {out.tokens.size(), out.tokens.size()}};
    } else {
      if (!open || open->poc != k) throw DataError("unbalanced marker " + token);
      open->span.end = out.tokens.size();
      if (open->span.end == open->span.start) throw DataError("empty marked mention " + token);
      out.mentions.push_back(*open);
      open.reset();
    }
  }
  if (open) throw DataError("unbalanced marker " + marker_start_token(open->poc));
  return out;
}

// z over the source region: z[i] = PoC id for positions inside a mention, 0
// elsewhere. Spans are in source-region coordinates.
inline PocIndexSequence build_poc_index_sequence(std::size_t source_len,
                                                 const std::vector<TaggedSpan>& mentions) {
  PocIndexSequence z(source_len, 0);
  for (const TaggedSpan& m : mentions) {
    if (m.poc < 1) throw DataError("PoC index must be >= 1");
    if (m.span.start >= m.span.end || m.span.end > source_len)
      throw DataError("span out of bounds");
    for (std::size_t i = m.span.start; i < m.span.end; ++i) {
      if (z[i] != 0 && z[i] != m.poc)
        throw DataError("position " + std::to_string(i) + " claimed by PoC " +
                        std::to_string(z[i]) + " and PoC " + std::to_string(m.poc));
      z[i] = m.poc;
    }
  }
  return z;
}

}  // namespace pocfuse
