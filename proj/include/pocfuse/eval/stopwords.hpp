#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_set>

namespace pocfuse {

// Fixed English function-word list used by the fusion heuristic, followed by
// the ASCII punctuation tokens tokenize() can emit. Pinned here verbatim so
// %Fuse is reproducible.
inline constexpr std::array<std::string_view, 150> kStopwordList = {
    "a",        "about",   "above",   "after",    "again",   "against", "all",     "am",
    "an",       "and",     "any",     "are",      "as",      "at",      "be",      "because",
    "been",     "before",  "being",   "below",    "between", "both",    "but",     "by",
    "can",      "could",   "did",     "do",       "does",    "doing",   "down",    "during",
    "each",     "few",     "for",     "from",     "further", "had",     "has",     "have",
    "having",   "he",      "her",     "here",     "hers",    "herself", "him",     "himself",
    "his",      "how",     "i",       "if",       "in",      "into",    "is",      "it",
    "its",      "itself",  "just",    "me",       "more",    "most",    "my",      "myself",
    "no",       "nor",     "not",     "now",      "of",      "off",     "on",      "once",
    "only",     "or",      "other",   "our",      "ours",    "ourselves", "out",   "over",
    "own",      "same",    "she",     "should",   "so",      "some",    "such",    "than",
    "that",     "the",     "their",   "theirs",   "them",    "themselves", "then", "there",
    "these",    "they",    "this",    "those",    "through", "to",      "too",     "under",
    "until",    "up",      "very",    "was",      "we",      "were",    "what",    "when",
    "where",    "which",   "while",   "who",      "whom",    "why",     "will",    "with",
    "would",    "you",     "your",    "yours",    "yourself", "yourselves", "also", "although",
    "among",    "around",  "may",     "might",    "must",    "shall",   "upon",    "within",
    "without",  "yet",     "s",       "t",        "said",    "says",    "like",    "since",
    "whether",  "either",  "neither", "onto",     "across",  "along"};

inline constexpr std::string_view kPunctuation = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

inline const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = [] {
    std::unordered_set<std::string> s;
    for (std::string_view w : kStopwordList) s.emplace(w);
    for (char c : kPunctuation) s.emplace(1, c);
    return s;
  }();
  return words;
}

}  // namespace pocfuse
