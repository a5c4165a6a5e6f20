#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pocfuse/corpus/types.hpp"
#include "pocfuse/error.hpp"

namespace pocfuse {

inline constexpr int kMaxPocMarkers = 10;

inline std::string marker_start_token(int k) { return "[S" + std::to_string(k) + "]"; }
inline std::string marker_end_token(int k) { return "[E" + std::to_string(k) + "]"; }

// Token <-> id map. Ids 0..5 are PAD, UNK, BOS, SEP, EOS, MASK; the next
// 2 * kMaxPocMarkers ids are S_1..S_10 then E_1..E_10; corpus tokens follow in
// lexicographic order. Reserved strings contain brackets, which tokenize()
// always splits off, so they cannot collide with corpus tokens.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kSep = 3;
  static constexpr int kEos = 4;
  static constexpr int kMask = 5;
  static constexpr int kFirstMarker = 6;
  static constexpr int kReservedCount = kFirstMarker + 2 * kMaxPocMarkers;

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  // Builds from content tokens only; reserved entries are prepended.
  explicit Vocabulary(const std::vector<std::string>& content_tokens) {
    for (const auto& t : reserved_tokens()) add(t);
    for (const auto& t : content_tokens) {
      if (index_.count(t)) throw DataError("duplicate vocabulary token '" + t + "'");
      add(t);
    }
  }

  // Rebuilds from a full id-ordered token list, e.g. from a checkpoint.
  static Vocabulary from_id_order(const std::vector<std::string>& all_tokens) {
    const auto reserved = reserved_tokens();
    if (all_tokens.size() < reserved.size() ||
        !std::equal(reserved.begin(), reserved.end(), all_tokens.begin()))
      throw DataError("vocabulary is missing reserved tokens");
    return Vocabulary(std::vector<std::string>(all_tokens.begin() + reserved.size(),
                                               all_tokens.end()));
  }

  static std::vector<std::string> reserved_tokens() {
    std::vector<std::string> r = {"[PAD]", "[UNK]", "[BOS]", "[SEP]", "[EOS]", "[MASK]"};
    for (int k = 1; k <= kMaxPocMarkers; ++k) r.push_back(marker_start_token(k));
    for (int k = 1; k <= kMaxPocMarkers; ++k) r.push_back(marker_end_token(k));
    return r;
  }

  static constexpr int marker_start_id(int k) { return kFirstMarker + k - 1; }
  static constexpr int marker_end_id(int k) { return kFirstMarker + kMaxPocMarkers + k - 1; }
  static constexpr bool is_marker(int id) { return id >= kFirstMarker && id < kReservedCount; }
  static constexpr bool is_reserved(int id) { return id >= 0 && id < kReservedCount; }

  int id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }
  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw InvariantError("token id " + std::to_string(id) + " outside vocabulary");
    return tokens_[id];
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> ids(const Tokens& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void add(const std::string& t) {
    index_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(t);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Every token of sentence A, sentence B and the summary with frequency >=
// min_count becomes a vocabulary entry; rarer tokens will map to UNK.
inline Vocabulary build_vocabulary(const std::vector<FusionInstance>& instances, int min_count) {
  if (instances.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, int> counts;
  for (const auto& inst : instances)
    for (const Tokens* seq : {&inst.sentence_a, &inst.sentence_b, &inst.summary})
      for (const auto& t : *seq) ++counts[t];
  std::vector<std::string> kept;
  for (const auto& [token, count] : counts)
    if (count >= min_count) kept.push_back(token);
  return Vocabulary(kept);
}

}  // namespace pocfuse
