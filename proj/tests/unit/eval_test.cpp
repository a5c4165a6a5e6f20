#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pocfuse/decode.hpp"
#include "pocfuse/eval/metrics.hpp"
#include "pocfuse/eval/report.hpp"
#include "pocfuse/eval/stopwords.hpp"

using namespace pocfuse;

namespace {

const Tokens kCatMat{"the", "cat", "sat", "on", "the", "mat"};
const Tokens kCatIs{"the", "cat", "is", "on", "the", "mat"};

Tokens numbered(const std::string& prefix, std::size_t n) {
  Tokens out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

bool brute_force_fusion(const Tokens& out, const Tokens& a, const Tokens& b,
                        const std::unordered_set<std::string>& stop) {
  auto contains = [](const Tokens& s, const std::string& t) {
    return std::find(s.begin(), s.end(), t) != s.end();
  };
  Tokens only_a, only_b;
  for (const auto& t : out) {
    if (stop.count(t)) continue;
    if (contains(a, t) && !contains(b, t) && !contains(only_a, t)) only_a.push_back(t);
    if (contains(b, t) && !contains(a, t) && !contains(only_b, t)) only_b.push_back(t);
  }
  return only_a.size() >= 2 && only_b.size() >= 2;
}

FusionInstance instance(Tokens a, Tokens b, Tokens summary) {
  FusionInstance inst;
  inst.id = "x";
  inst.sentence_a = std::move(a);
  inst.sentence_b = std::move(b);
  inst.summary = std::move(summary);
  return inst;
}

}  // namespace

TEST(Rouge, Examples) {
  EXPECT_NEAR(rouge_n({"the", "cat"}, {"the", "cat", "sat"}, 1), 0.8, 1e-12);
  EXPECT_NEAR(rouge_l({"a", "c", "d", "e"}, {"a", "b", "c", "d"}), 0.75, 1e-12);
  EXPECT_NEAR(rouge_n(kCatIs, kCatMat, 1), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(rouge_n(kCatIs, kCatMat, 2), 0.6, 1e-12);
  EXPECT_NEAR(rouge_l(kCatIs, kCatMat), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(rouge_n({"a", "a", "a", "b"}, {"a", "a", "b", "b"}, 1), 0.75, 1e-12);
  EXPECT_NEAR(rouge_n({"a", "a", "a", "b"}, {"a", "a", "b", "b"}, 2), 2.0 / 3.0, 1e-12);
}

TEST(Rouge, IdenticalAndDegenerate) {
  EXPECT_DOUBLE_EQ(rouge_n(kCatMat, kCatMat, 1), 1.0);
  EXPECT_DOUBLE_EQ(rouge_n(kCatMat, kCatMat, 2), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l(kCatMat, kCatMat), 1.0);
  EXPECT_EQ(rouge_n({}, kCatMat, 1), 0.0);
  EXPECT_EQ(rouge_n({"x"}, kCatMat, 2), 0.0);
  EXPECT_EQ(rouge_l({}, kCatMat), 0.0);
  EXPECT_EQ(rouge_n({"x", "y"}, {"z"}, 1), 0.0);
  EXPECT_THROW(rouge_n(kCatMat, kCatMat, 0), UsageError);
}

TEST(Bleu, OracleValues) {
  EXPECT_NEAR(bleu(kCatIs, kCatMat), 42.04482076268573, 1e-9);
  EXPECT_NEAR(bleu(numbered("h", 30), numbered("r", 30)), 3.392268780792677, 1e-9);
  EXPECT_NEAR(bleu(numbered("h", 5), numbered("r", 5)), 22.95748846661433, 1e-9);
  EXPECT_NEAR(bleu(numbered("h", 4), numbered("r", 4)), 30.21375397356768, 1e-9);
  EXPECT_NEAR(bleu({"a", "b", "c", "d"}, {"a", "b", "c", "d", "e", "f", "g", "h"}),
              36.787944117144235, 1e-9);
  EXPECT_NEAR(bleu({"a", "a", "a", "b"}, {"a", "a", "b", "b"}), 59.46035575013605, 1e-9);
}

TEST(Bleu, IdenticalIsHundredAndEmptyIsZero) {
  EXPECT_NEAR(bleu(kCatMat, kCatMat), 100.0, 1e-9);
  EXPECT_EQ(bleu({}, kCatMat), 0.0);
}

TEST(IsFusion, Examples) {
  const auto& stop = default_stopwords();
  const Tokens a{"paris", "hosted", "olympics", "in", "1924"};
  const Tokens b{"paris", "is", "capital", "of", "france"};
  EXPECT_TRUE(is_fusion({"paris", "hosted", "olympics", "capital", "france"}, a, b, stop));
  EXPECT_FALSE(is_fusion({"paris", "hosted", "olympics", "capital"}, a, b, stop));
  EXPECT_FALSE(is_fusion({"hosted", "hosted", "capital", "france"}, a, b, stop));
  EXPECT_FALSE(is_fusion({"paris", "in", "hosted", "is", "of", "capital"}, a, b, stop));
  EXPECT_FALSE(is_fusion({}, a, b, stop));
}

TEST(IsFusion, MatchesBruteForce) {
  std::mt19937_64 rng(31);
  const auto& stop = default_stopwords();
  const Tokens pool{"the", "a", "of", ",", "x1", "x2", "x3", "y1", "y2", "y3", "z1", "z2"};
  auto draw = [&](std::size_t n) {
    Tokens out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(pool[rng() % pool.size()]);
    return out;
  };
  int positives = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Tokens a = draw(1 + rng() % 8), b = draw(1 + rng() % 8), out = draw(rng() % 10);
    const bool expected = brute_force_fusion(out, a, b, stop);
    positives += expected;
    EXPECT_EQ(is_fusion(out, a, b, stop), expected);
  }
  EXPECT_GT(positives, 0);
}

TEST(Stopwords, IncludePunctuation) {
  const auto& stop = default_stopwords();
  EXPECT_TRUE(stop.count("the"));
  EXPECT_TRUE(stop.count(","));
  EXPECT_TRUE(stop.count("."));
  EXPECT_FALSE(stop.count("paris"));
}

TEST(Extractiveness, Examples) {
  const Tokens a{"w", "x", "y", "z"}, b{"p", "q"};
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_DOUBLE_EQ(extractiveness(a, a, b, n), 1.0);
  EXPECT_DOUBLE_EQ(extractiveness({"w", "x", "new", "q"}, a, b, 1), 0.75);
  EXPECT_EQ(extractiveness({"w"}, a, b, 2), 0.0);
  EXPECT_DOUBLE_EQ(extractiveness({"z", "p"}, a, b, 2), 0.0);
  EXPECT_THROW(extractiveness(a, a, b, 0), UsageError);
}

TEST(EvaluateCorpus, PerfectOutputs) {
  const std::vector<FusionInstance> insts{instance({"u", "v"}, {"w"}, kCatMat)};
  const auto r = evaluate_corpus(insts, {kCatMat}, default_stopwords());
  EXPECT_DOUBLE_EQ(r.r1, 1.0);
  EXPECT_DOUBLE_EQ(r.r2, 1.0);
  EXPECT_DOUBLE_EQ(r.rl, 1.0);
  EXPECT_NEAR(r.bleu, 100.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.avg_tokens, 6.0);
}

// N-grams spanning the A/B seam of a concatenation occur in neither source:
// 4/5 and 3/4 bigrams, 2/4 and 1/3 trigrams.
TEST(EvaluateCorpus, ConcatenationIsExtractiveExceptAtTheSeam) {
  const std::vector<FusionInstance> insts{
      instance({"paris", "hosted", "olympics"}, {"paris", "capital", "france"}, {"paris", "capital"}),
      instance({"a1", "a2"}, {"b1", "b2", "b3"}, {"a1"})};
  std::vector<Tokens> outs;
  for (const auto& i : insts) outs.push_back(concat_baseline(i.sentence_a, i.sentence_b));
  const auto r = evaluate_corpus(insts, outs, default_stopwords());
  EXPECT_DOUBLE_EQ(r.extractiveness[0], 1.0);
  EXPECT_DOUBLE_EQ(r.extractiveness[1], (0.8 + 0.75) / 2);
  EXPECT_DOUBLE_EQ(r.extractiveness[2], (0.5 + 1.0 / 3.0) / 2);
  EXPECT_DOUBLE_EQ(r.fuse_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.avg_tokens, 5.5);
}

TEST(EvaluateCorpus, InvariantToInstanceOrder) {
  std::mt19937_64 rng(8);
  const Tokens pool{"a", "b", "c", "d", "e", "f", "g"};
  auto draw = [&] {
    Tokens out;
    for (std::size_t i = 0, n = 1 + rng() % 7; i < n; ++i) out.push_back(pool[rng() % pool.size()]);
    return out;
  };
  std::vector<FusionInstance> insts;
  std::vector<Tokens> outs;
  for (int i = 0; i < 12; ++i) {
    insts.push_back(instance(draw(), draw(), draw()));
    outs.push_back(draw());
  }
  const auto before = evaluate_corpus(insts, outs, default_stopwords());
  std::vector<std::size_t> perm(insts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<FusionInstance> insts2;
  std::vector<Tokens> outs2;
  for (std::size_t p : perm) {
    insts2.push_back(insts[p]);
    outs2.push_back(outs[p]);
  }
  EXPECT_EQ(evaluate_corpus(insts2, outs2, default_stopwords()), before);
  for (double v : {before.r1, before.r2, before.rl, before.fuse_rate}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GE(before.bleu, 0.0);
  EXPECT_LE(before.bleu, 100.0);
}

TEST(EvaluateCorpus, CountMismatchAndEmptyInputs) {
  const std::vector<FusionInstance> insts{instance({"a"}, {"b"}, {"c"})};
  EXPECT_THROW(evaluate_corpus(insts, {}, default_stopwords()), DataError);
  EXPECT_EQ(evaluate_corpus({}, {}, default_stopwords()), MetricsReport{});
  const auto r = evaluate_corpus(insts, {Tokens{}}, default_stopwords());
  EXPECT_EQ(r, MetricsReport{});
}

TEST(Report, JsonRoundTripAndTable) {
  MetricsReport r;
  r.r1 = 0.5;
  r.r2 = 0.25;
  r.rl = 0.4;
  r.bleu = 12.5;
  r.avg_tokens = 7;
  r.fuse_rate = 0.1;
  r.extractiveness = {0.9, 0.8, 0.7};
  const auto j = to_json(r);
  for (const char* key : {"r1", "r2", "rl", "bleu", "avg_tokens", "fuse_rate", "extractiveness"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(metrics_from_json(j), r);
  const std::string table = render_table({{"transformer", r}});
  for (const char* col : {"R-1", "R-2", "R-L", "BLEU", "#Tkns", "%Fuse", "Ext-1", "Ext-2", "Ext-3"})
    EXPECT_NE(table.find(col), std::string::npos) << col;
  EXPECT_NE(table.find("transformer"), std::string::npos);
  EXPECT_NE(table.find("50.0"), std::string::npos);
  const auto arr = systems_to_json({{"transformer", r}});
  ASSERT_EQ(arr.size(), 1u);
  EXPECT_EQ(arr[0]["system"], "transformer");
}
