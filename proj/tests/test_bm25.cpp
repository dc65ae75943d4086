#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "deepnote/bm25.hpp"
#include "deepnote/error.hpp"
#include "naive_bm25.hpp"

using namespace deepnote;

namespace {

Corpus fruit() {
  return Corpus({{"D1", "", "apple banana"}, {"D2", "", "apple apple cherry"}, {"D3", "", "durian"}});
}

}  // namespace

TEST(Bm25, HandComputedScores) {
  // N = 3, df(apple) = 2: idf = ln(1 + 1.5 / 2.5) = ln 1.6
  // avgdl = (2 + 3 + 1) / 3 = 2
  // D2: tf 2, dl 3 -> idf * 2 * 2.2 / (2 + 1.2 * (0.25 + 0.75 * 1.5)) = idf * 4.4 / 3.65
  // D1: tf 1, dl 2 -> idf * 2.2 / (1 + 1.2) = idf
  const double idf = std::log(1.6);
  auto index = Bm25Index::build(fruit());
  EXPECT_NEAR(index.idf("apple"), idf, 1e-15);
  auto hits = index.search("apple", 10);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].passage_id, "D2");
  EXPECT_NEAR(hits[0].score, idf * 4.4 / 3.65, 1e-12);
  EXPECT_NEAR(hits[0].score, 0.566580, 1e-6);
  EXPECT_EQ(hits[1].passage_id, "D1");
  EXPECT_NEAR(hits[1].score, 0.470004, 1e-6);
  EXPECT_EQ(hits[0].rank, 1);
  EXPECT_EQ(hits[1].rank, 2);
}

TEST(Bm25, ZeroScoresAreNotReturned) {
  auto index = Bm25Index::build(fruit());
  EXPECT_TRUE(index.search("mango", 5).empty());
  EXPECT_TRUE(index.search("", 5).empty());
  EXPECT_EQ(index.search("durian apple", 5).size(), 3u);
}

TEST(Bm25, TiesBreakOnIdAscending) {
  Corpus c({{"z", "", "same words"}, {"m", "", "same words"}, {"a", "", "same words"}, {"q", "", "other"}});
  auto hits = Bm25Index::build(c).search("same", 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].passage_id, "a");
  EXPECT_EQ(hits[1].passage_id, "m");
  EXPECT_EQ(hits[2].passage_id, "z");
  EXPECT_EQ(hits[0].score, hits[2].score);
}

TEST(Bm25, RepeatedQueryTermCountsTwice) {
  auto index = Bm25Index::build(fruit());
  const double once = index.search("apple", 1)[0].score;
  const double twice = index.search("apple apple", 1)[0].score;
  EXPECT_NEAR(twice, 2 * once, 1e-12);
}

TEST(Bm25, KLimitsAndValidation) {
  auto index = Bm25Index::build(fruit());
  EXPECT_EQ(index.search("apple", 1).size(), 1u);
  EXPECT_THROW(index.search("apple", 0), ConfigError);
  EXPECT_THROW(Bm25Index::build(fruit(), Bm25Params{-1.0, 0.75}), ConfigError);
  EXPECT_THROW(Bm25Index::build(fruit(), Bm25Params{1.2, 1.5}), ConfigError);
}

TEST(Bm25, TitlesAreIndexed) {
  Corpus c({{"t", "Warsaw", "capital city"}, {"u", "", "another city"}});
  auto hits = Bm25Index::build(c).search("warsaw", 5);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].passage_id, "t");
}

TEST(Bm25, PostingsAndDocFreq) {
  auto index = Bm25Index::build(fruit());
  EXPECT_EQ(index.doc_freq("apple"), 2u);
  EXPECT_EQ(index.doc_freq("nothing"), 0u);
  ASSERT_NE(index.postings("apple"), nullptr);
  EXPECT_EQ(*index.postings("apple"), (std::vector<Posting>{{0, 1}, {1, 2}}));
  EXPECT_EQ(index.postings("nothing"), nullptr);
}

TEST(Bm25, SaveLoadPreservesResults) {
  auto corpus = deepnote::testing::synthetic_docs(60, 3);
  auto index = Bm25Index::build(Corpus(corpus));
  std::stringstream buf;
  index.save(buf);
  auto loaded = Bm25Index::load(buf);
  for (const auto& q : deepnote::testing::synthetic_queries(20, 4)) {
    EXPECT_EQ(index.search(q, 10), loaded.search(q, 10)) << q;
  }
}

TEST(Bm25, LoadRejectsGarbage) {
  std::stringstream buf("{\"format\":\"something-else\"}\n");
  EXPECT_THROW(Bm25Index::load(buf), DataError);
}

TEST(Bm25, IndexBundleRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "deepnote_bundle_test.jsonl";
  Corpus c = fruit();
  save_index_bundle(path, c, Bm25Index::build(c));
  auto bundle = load_index_bundle(path);
  EXPECT_EQ(bundle.corpus.passages(), c.passages());
  EXPECT_EQ(bundle.index.search("apple", 5), Bm25Index::build(c).search("apple", 5));
  std::filesystem::remove(path);
}

class Bm25Oracle : public ::testing::TestWithParam<unsigned> {};

TEST_P(Bm25Oracle, MatchesNaiveScorer) {
  auto cmp = deepnote::testing::compare_with_naive(120, 40, 10, GetParam());
  EXPECT_TRUE(cmp.ok) << cmp.first_mismatch;
  EXPECT_LT(cmp.max_score_delta, 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Seeds, Bm25Oracle, ::testing::Values(1u, 2u, 3u, 99u));
