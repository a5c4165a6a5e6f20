#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "pocfuse/corpus/types.hpp"
#include "pocfuse/error.hpp"
#include "pocfuse/eval/stopwords.hpp"

namespace pocfuse {

// Pronounceable two-syllable pseudo-words, skipping anything on the stopword
// list so every lexicon word counts as content for %Fuse.
inline std::vector<std::string> synthetic_lexicon(std::size_t size) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::vector<std::string> syllables;
  for (char c : consonants)
    for (char v : vowels) syllables.push_back(std::string{c, v});
  const auto& stop = default_stopwords();
  std::vector<std::string> words;
  for (std::size_t i = 0; words.size() < size; ++i) {
    std::string w = syllables[(i / syllables.size()) % syllables.size()] + syllables[i % syllables.size()];
    if (i >= syllables.size() * syllables.size()) w += std::to_string(i);
    if (!stop.count(w)) words.push_back(std::move(w));
  }
  return words;
}

// Each instance draws 1-3 PoCs whose sentence-B mention either repeats the
// sentence-A chunk or paraphrases it with different words, plus 2-3 content
// words exclusive to each sentence:
//
//   A:       <poc1_a> was <content_a> [with <pocK_a>]* .
//   B:       the <poc1_b> has <content_b> [for <pocK_b>]* .
//   summary: <poc1_a> was <content_a> and has <content_b> .
//
// so the target always fuses exclusive content from both sources around the
// first point of correspondence.
inline std::vector<FusionInstance> generate_synthetic_corpus(std::size_t n_instances,
                                                             std::size_t vocab_size,
                                                             std::uint64_t seed) {
  if (n_instances < 1) throw UsageError("synthetic corpus needs at least one instance");
  if (vocab_size < 20) throw UsageError("synthetic vocabulary size must be at least 20");
  const std::vector<std::string> lexicon = synthetic_lexicon(vocab_size);
  std::seed_seq seq{seed, std::uint64_t{7}};
  std::mt19937_64 rng(seq);
  auto uniform = [&rng](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  std::vector<FusionInstance> corpus;
  for (std::size_t n = 0; n < n_instances; ++n) {
    std::vector<std::string> pool = lexicon;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::size_t next = 0;
    auto take = [&](std::size_t count) {
      Tokens out(pool.begin() + static_cast<std::ptrdiff_t>(next),
                 pool.begin() + static_cast<std::ptrdiff_t>(next + count));
      next += count;
      return out;
    };

    const std::size_t poc_count = uniform(1, 3);
    std::vector<Tokens> chunk_a, chunk_b;
    for (std::size_t k = 0; k < poc_count; ++k) {
      chunk_a.push_back(take(uniform(1, 2)));
      chunk_b.push_back(uniform(0, 1) == 0 ? chunk_a.back() : take(uniform(1, 2)));
    }
    const Tokens content_a = take(uniform(2, 3));
    const Tokens content_b = take(uniform(2, 3));

    FusionInstance inst;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%04zu", n);
    inst.id = id;
    std::vector<PoC> pocs(poc_count);
    auto append = [](Tokens& dst, const Tokens& src) { dst.insert(dst.end(), src.begin(), src.end()); };
    auto mention = [&](Tokens& sentence, SentenceId which, std::size_t k) {
      const Tokens& chunk = which == SentenceId::a ? chunk_a[k] : chunk_b[k];
      pocs[k].poc_id = static_cast<int>(k) + 1;
      pocs[k].mentions.push_back({which, {sentence.size(), sentence.size() + chunk.size()}});
      append(sentence, chunk);
    };

    Tokens& a = inst.sentence_a;
    mention(a, SentenceId::a, 0);
    a.push_back("was");
    append(a, content_a);
    for (std::size_t k = 1; k < poc_count; ++k) {
      a.push_back("with");
      mention(a, SentenceId::a, k);
    }
    a.push_back(".");

    Tokens& b = inst.sentence_b;
    b.push_back("the");
    mention(b, SentenceId::b, 0);
    b.push_back("has");
    append(b, content_b);
    for (std::size_t k = 1; k < poc_count; ++k) {
      b.push_back("for");
      mention(b, SentenceId::b, k);
    }
    b.push_back(".");

    Tokens& s = inst.summary;
    append(s, chunk_a[0]);
    s.push_back("was");
    append(s, content_a);
    s.push_back("and");
    s.push_back("has");
    append(s, content_b);
    s.push_back(".");

    inst.pocs = std::move(pocs);
    corpus.push_back(std::move(inst));
  }
  return corpus;
}

}  // namespace pocfuse
