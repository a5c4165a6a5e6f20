#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "pocfuse/corpus/types.hpp"
#include "pocfuse/error.hpp"

namespace pocfuse {

using NgramCounts = std::map<std::vector<std::string>, int>;

inline NgramCounts ngram_counts(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (n == 0 || tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

// Sum over hypothesis n-grams of min(hyp count, ref count).
inline int clipped_overlap(const NgramCounts& hyp, const NgramCounts& ref) {
  int overlap = 0;
  for (const auto& [gram, count] : hyp)
    if (auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
  return overlap;
}

inline double f1(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline double rouge_n(const Tokens& hypothesis, const Tokens& reference, std::size_t n) {
  if (n == 0) throw UsageError("rouge_n requires n >= 1");
  if (hypothesis.size() < n || reference.size() < n) return 0.0;
  const int overlap = clipped_overlap(ngram_counts(hypothesis, n), ngram_counts(reference, n));
  const double precision = overlap / static_cast<double>(hypothesis.size() - n + 1);
  const double recall = overlap / static_cast<double>(reference.size() - n + 1);
  return f1(precision, recall);
}

inline std::size_t lcs_length(const Tokens& x, const Tokens& y) {
  std::vector<std::size_t> prev(y.size() + 1, 0), cur(y.size() + 1, 0);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j)
      cur[j] = x[i - 1] == y[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

inline double rouge_l(const Tokens& hypothesis, const Tokens& reference) {
  if (hypothesis.empty() || reference.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(hypothesis, reference));
  return f1(lcs / static_cast<double>(hypothesis.size()), lcs / static_cast<double>(reference.size()));
}

// Sentence BLEU on a 0-100 scale: geometric mean of clipped n-gram precisions
// for n = 1..4, with a precision of 0/c replaced by 1/(c+1), times the brevity
// penalty exp(1 - |ref|/|hyp|) when the hypothesis is shorter.
inline double bleu(const Tokens& hypothesis, const Tokens& reference) {
  if (hypothesis.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const double total =
        hypothesis.size() >= n ? static_cast<double>(hypothesis.size() - n + 1) : 0.0;
    const int matches = clipped_overlap(ngram_counts(hypothesis, n), ngram_counts(reference, n));
    const double precision = matches > 0 ? matches / total : 1.0 / (total + 1.0);
    log_sum += std::log(precision);
  }
  const double h = static_cast<double>(hypothesis.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = h < r ? std::exp(1.0 - r / h) : 1.0;
  return 100.0 * brevity * std::exp(log_sum / 4.0);
}

// An output fuses A and B when it contains at least two distinct
// non-stopword tokens found in A but not B, and at least two found in B but
// not A.
inline bool is_fusion(const Tokens& output, const Tokens& a, const Tokens& b,
                      const std::unordered_set<std::string>& stopwords) {
  const std::set<std::string> in_a(a.begin(), a.end()), in_b(b.begin(), b.end());
  std::set<std::string> from_a, from_b;
  for (const auto& t : output) {
    if (stopwords.count(t)) continue;
    const bool ia = in_a.count(t) > 0, ib = in_b.count(t) > 0;
    if (ia && !ib) from_a.insert(t);
    if (ib && !ia) from_b.insert(t);
  }
  return from_a.size() >= 2 && from_b.size() >= 2;
}

// Fraction of output n-grams that occur in A or in B. N-grams never span
// the boundary between the two sentences.
inline double extractiveness(const Tokens& output, const Tokens& a, const Tokens& b, std::size_t n) {
  if (n == 0) throw UsageError("extractiveness requires n >= 1");
  if (output.size() < n) return 0.0;
  const NgramCounts source_a = ngram_counts(a, n), source_b = ngram_counts(b, n);
  std::size_t present = 0;
  for (std::size_t i = 0; i + n <= output.size(); ++i) {
    const std::vector<std::string> gram(output.begin() + static_cast<std::ptrdiff_t>(i),
                                        output.begin() + static_cast<std::ptrdiff_t>(i + n));
    if (source_a.count(gram) || source_b.count(gram)) ++present;
  }
  return present / static_cast<double>(output.size() - n + 1);
}

struct MetricsReport {
  double r1 = 0.0, r2 = 0.0, rl = 0.0;
  double bleu = 0.0;
  double avg_tokens = 0.0;
  double fuse_rate = 0.0;
  std::array<double, 3> extractiveness{};
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

namespace detail {

// Sums in sorted order so the mean does not depend on instance order.
inline double order_free_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace detail

// Per-instance metrics averaged over the corpus; sentence BLEU is averaged
// too. `outputs[i]` is the system output for `instances[i]`.
inline MetricsReport evaluate_corpus(const std::vector<FusionInstance>& instances,
                                     const std::vector<Tokens>& outputs,
                                     const std::unordered_set<std::string>& stopwords) {
  if (instances.size() != outputs.size())
    throw DataError("evaluate: " + std::to_string(outputs.size()) + " outputs for " +
                    std::to_string(instances.size()) + " instances");
  std::array<std::vector<double>, 9> columns;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const FusionInstance& inst = instances[i];
    const Tokens& out = outputs[i];
    columns[0].push_back(rouge_n(out, inst.summary, 1));
    columns[1].push_back(rouge_n(out, inst.summary, 2));
    columns[2].push_back(rouge_l(out, inst.summary));
    columns[3].push_back(bleu(out, inst.summary));
    columns[4].push_back(static_cast<double>(out.size()));
    columns[5].push_back(is_fusion(out, inst.sentence_a, inst.sentence_b, stopwords) ? 1.0 : 0.0);
    for (std::size_t n = 1; n <= 3; ++n)
      columns[5 + n].push_back(extractiveness(out, inst.sentence_a, inst.sentence_b, n));
  }
  MetricsReport r;
  r.r1 = detail::order_free_mean(columns[0]);
  r.r2 = detail::order_free_mean(columns[1]);
  r.rl = detail::order_free_mean(columns[2]);
  r.bleu = detail::order_free_mean(columns[3]);
  r.avg_tokens = detail::order_free_mean(columns[4]);
  r.fuse_rate = detail::order_free_mean(columns[5]);
  for (std::size_t n = 0; n < 3; ++n) r.extractiveness[n] = detail::order_free_mean(columns[6 + n]);
  return r;
}

// Instances with at least one point of correspondence; the others are not
// scored.
inline std::vector<FusionInstance> with_pocs(const std::vector<FusionInstance>& instances) {
  std::vector<FusionInstance> out;
  for (const auto& inst : instances)
    if (!inst.pocs.empty()) out.push_back(inst);
  return out;
}

}  // namespace pocfuse
