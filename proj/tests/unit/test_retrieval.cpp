#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "storygen/error.hpp"
#include "storygen/retrieval.hpp"

using namespace storygen;

TEST(Bm25, Tokenizer) {
  EXPECT_EQ(bm25_tokenize("Hello, WORLD! x-ray café"),
            (std::vector<std::string>{"hello", "world", "x", "ray", "café"}));
  EXPECT_TRUE(bm25_tokenize(" ,.! ").empty());
}

TEST(Bm25, BuildErrors) {
  EXPECT_THROW(Bm25Index::build({}), Error);
  try {
    Bm25Index::build({{1, "a"}, {1, "b"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateDocId);
  }
}

TEST(Bm25, HandComputedTwoDocCase) {
  // N=2, "cat" appears in one doc: idf = ln((2-1+0.5)/(1+0.5)+1) = ln 2.
  auto idx = Bm25Index::build({{1, "cat sat"}, {2, "dog ran"}});
  EXPECT_NEAR(idx.idf("cat"), std::log(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(idx.avgdl(), 2.0);
  // dl = avgdl so the length factor is 1: tf(k1+1)/(tf+k1) = 2.2/2.2 = 1.
  auto hits = idx.top_k("cat", 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].doc_id, 1);
  EXPECT_NEAR(hits[0].score, std::log(2.0), 1e-12);
  EXPECT_EQ(hits[1].score, 0.0);
}

TEST(Bm25, RepeatedQueryTermsCountOnce) {
  auto idx = Bm25Index::build({{1, "red fox"}, {2, "blue fox"}, {3, "red red hen"}});
  auto a = idx.top_k("red", 3);
  auto b = idx.top_k("red red red", 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].doc_id, b[i].doc_id);
    EXPECT_DOUBLE_EQ(a[i].score, b[i].score);
  }
}

TEST(Bm25, TiesBreakByAscendingId) {
  auto idx = Bm25Index::build({{9, "same words"}, {3, "same words"}, {5, "other"}});
  auto hits = idx.top_k("same", 3);
  EXPECT_EQ(hits[0].doc_id, 3);
  EXPECT_EQ(hits[1].doc_id, 9);
  EXPECT_EQ(idx.top_k("same", 10).size(), 3u);
}

TEST(Bm25, MatchesDirectFormulaOnRandomCorpora) {
  const std::vector<std::string> vocab = {"dragon", "king", "ship", "rain", "war",  "love", "robot",
                                          "forest", "sea",  "time", "ghost", "city", "night"};
  std::mt19937_64 rng(11);
  for (int corpus = 0; corpus < 3; ++corpus) {
    std::vector<std::pair<int, std::string>> docs;
    for (int d = 0; d < 15; ++d) {
      std::string text;
      const auto len = 1 + rng() % 10;
      for (std::size_t w = 0; w < len; ++w) text += vocab[rng() % vocab.size()] + " ";
      docs.emplace_back(100 + d, text);
    }
    auto idx = Bm25Index::build(docs);
    for (int q = 0; q < 10; ++q) {
      std::string query = vocab[rng() % vocab.size()] + " " + vocab[rng() % vocab.size()];
      auto expect = oracle::bm25(docs, query);
      auto got = idx.top_k(query, docs.size());
      ASSERT_EQ(got.size(), expect.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].doc_id, expect[i].id) << query << " at " << i;
        EXPECT_NEAR(got[i].score, expect[i].score, 1e-9);
      }
    }
  }
}
