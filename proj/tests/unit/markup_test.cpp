#include <random>

#include <gtest/gtest.h>

#include "pocfuse/markup.hpp"

using namespace pocfuse;

namespace {

std::string error_of(const Tokens& marked) {
  try {
    strip_poc_markers(marked);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(InsertMarkers, SingleMention) {
  EXPECT_EQ(insert_poc_markers({"allan", "donald", "will", "leave"}, {{1, {0, 2}}}),
            (Tokens{"[S1]", "allan", "donald", "[E1]", "will", "leave"}));
}

TEST(InsertMarkers, NoMentions) {
  EXPECT_EQ(insert_poc_markers({"a", "b"}, {}), (Tokens{"a", "b"}));
}

TEST(InsertMarkers, TwoPocs) {
  EXPECT_EQ(insert_poc_markers({"a", "b", "c"}, {{2, {2, 3}}, {1, {0, 1}}}),
            (Tokens{"[S1]", "a", "[E1]", "b", "[S2]", "c", "[E2]"}));
}

TEST(InsertMarkers, SamePocSharesMarkerPair) {
  EXPECT_EQ(insert_poc_markers({"x", "y", "z"}, {{3, {0, 1}}, {3, {2, 3}}}),
            (Tokens{"[S3]", "x", "[E3]", "y", "[S3]", "z", "[E3]"}));
}

TEST(InsertMarkers, RejectsBadSpans) {
  EXPECT_THROW(insert_poc_markers({"a", "b"}, {{1, {1, 3}}}), DataError);
  EXPECT_THROW(insert_poc_markers({"a", "b", "c"}, {{1, {0, 2}}, {2, {1, 3}}}), DataError);
  EXPECT_THROW(insert_poc_markers({"a"}, {{1, {1, 1}}}), DataError);
}

TEST(StripMarkers, Examples) {
  const auto s = strip_poc_markers({"[S1]", "a", "[E1]", "b"});
  EXPECT_EQ(s.tokens, (Tokens{"a", "b"}));
  EXPECT_EQ(s.mentions, (std::vector<TaggedSpan>{{1, {0, 1}}}));
  const auto plain = strip_poc_markers({"a", "b"});
  EXPECT_EQ(plain.tokens, (Tokens{"a", "b"}));
  EXPECT_TRUE(plain.mentions.empty());
}

TEST(StripMarkers, Errors) {
  EXPECT_NE(error_of({"[S1]", "a", "b"}).find("unbalanced marker"), std::string::npos);
  EXPECT_NE(error_of({"a", "[E1]"}).find("unbalanced marker"), std::string::npos);
  EXPECT_NE(error_of({"[S1]", "a", "[E2]"}).find("unbalanced marker"), std::string::npos);
  EXPECT_NE(error_of({"[S1]", "[S2]", "a", "[E2]", "[E1]"}).find("nested marker"), std::string::npos);
  EXPECT_NE(error_of({"[S1]", "[E1]"}).find("empty marked mention"), std::string::npos);
}

TEST(StripMarkers, RoundTripOnRandomInputs) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = rng() % 15;
    Tokens tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back("t" + std::to_string(rng() % 6));
    std::vector<TaggedSpan> mentions;
    for (std::size_t i = 0; i < n;) {
      const std::size_t gap = rng() % 3, len = 1 + rng() % 3;
      if (i + gap + len > n) break;
      mentions.push_back({1 + static_cast<int>(rng() % 10), {i + gap, i + gap + len}});
      i += gap + len;
    }
    const Tokens marked = insert_poc_markers(tokens, mentions);
    EXPECT_EQ(marked.size(), tokens.size() + 2 * mentions.size());
    const auto back = strip_poc_markers(marked);
    EXPECT_EQ(back.tokens, tokens);
    EXPECT_EQ(back.mentions, mentions);
  }
}

TEST(IndexSequence, Examples) {
  EXPECT_EQ(build_poc_index_sequence(5, {{1, {1, 2}}, {1, {3, 4}}}), (PocIndexSequence{0, 1, 0, 1, 0}));
  EXPECT_EQ(build_poc_index_sequence(4, {}), (PocIndexSequence{0, 0, 0, 0}));
  EXPECT_THROW(build_poc_index_sequence(4, {{1, {0, 2}}, {2, {1, 3}}}), DataError);
  EXPECT_THROW(build_poc_index_sequence(4, {{1, {3, 5}}}), DataError);
}

TEST(MarkerTokens, Recognized) {
  EXPECT_TRUE(is_marker_token("[S1]"));
  EXPECT_TRUE(is_marker_token("[E10]"));
  EXPECT_FALSE(is_marker_token("[SEP]"));
  EXPECT_FALSE(is_marker_token("s1"));
  EXPECT_FALSE(is_marker_token("[S0]"));
}
