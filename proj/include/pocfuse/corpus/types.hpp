#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pocfuse {

using Tokens = std::vector<std::string>;

enum class SentenceId { a, b, summary };

// Half-open token interval [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct Mention {
  SentenceId sentence = SentenceId::a;
  Span span;
  friend bool operator==(const Mention&, const Mention&) = default;
};

// One point of correspondence: every mention realizes the same meaning.
struct PoC {
  int poc_id = 1;
  std::vector<Mention> mentions;
  friend bool operator==(const PoC&, const PoC&) = default;
};

struct FusionInstance {
  std::string id;
  Tokens sentence_a;
  Tokens sentence_b;
  Tokens summary;
  std::vector<PoC> pocs;
  friend bool operator==(const FusionInstance&, const FusionInstance&) = default;
};

enum class Variant { baseline, linking, sharerepr };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::linking: return "linking";
    case Variant::sharerepr: return "sharerepr";
  }
  return "baseline";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "baseline") return Variant::baseline;
  if (s == "linking") return Variant::linking;
  if (s == "sharerepr") return Variant::sharerepr;
  return std::nullopt;
}

inline std::string_view to_string(SentenceId s) {
  switch (s) {
    case SentenceId::a: return "a";
    case SentenceId::b: return "b";
    case SentenceId::summary: return "summary";
  }
  return "a";
}

}  // namespace pocfuse
