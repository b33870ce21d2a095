#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "storygen/error.hpp"
#include "storygen/metrics.hpp"

using namespace storygen;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

// Maps known texts to fixed vectors.
class TableProvider : public EmbeddingProvider {
 public:
  explicit TableProvider(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {}
  std::size_t dim() const override { return 2; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) out.push_back(table_.at(t));
    return out;
  }

 private:
  std::map<std::string, std::vector<double>> table_;
};

}  // namespace

TEST(Rouge, HandCase) {
  auto r = rouge_l("the cat sat", "the cat");
  EXPECT_NEAR(r.precision, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.recall, 1.0, 1e-12);
  EXPECT_NEAR(r.f1, 0.8, 1e-12);
  EXPECT_EQ(rouge_l("", "x").f1, 0.0);
  EXPECT_DOUBLE_EQ(rouge_l("A b C", "a B c").f1, 1.0);
}

TEST(Rouge, MatchesLcsOracle) {
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f"};
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    std::string x, y;
    for (std::size_t k = 0, n = 1 + rng() % 12; k < n; ++k) x += vocab[rng() % vocab.size()] + " ";
    for (std::size_t k = 0, n = 1 + rng() % 12; k < n; ++k) y += vocab[rng() % vocab.size()] + " ";
    EXPECT_NEAR(rouge_l(x, y).f1, oracle::rouge_l_f1(x, y), 1e-12) << x << "|" << y;
  }
}

TEST(Bleu, HandCase) {
  // Clipped precisions 5/6, 3/5, 2/4, 1/3 with equal lengths.
  EXPECT_NEAR(bleu("the cat sat on the mat", "the cat sat on a mat"), std::pow(1.0 / 12.0, 0.25), 1e-12);
  EXPECT_NEAR(bleu("one two three four five", "one two three four five"), 1.0, 1e-12);
  EXPECT_EQ(bleu("x y", "a b"), 0.0);
  EXPECT_EQ(bleu("", "a"), 0.0);
}

TEST(Bleu, BrevityPenaltyAndSmoothing) {
  // Candidate is a 4-token prefix of an 8-token reference: precisions are 1.
  EXPECT_NEAR(bleu("a b c d", "a b c d e f g h"), std::exp(1.0 - 2.0), 1e-12);
  // No bigram matches: 1-gram 2/2, then 1/(1+1), 1/(0+1), 1/(0+1).
  EXPECT_NEAR(bleu("b a", "a b"), std::pow(0.5, 0.25), 1e-12);
}

TEST(Homogenization, MeanOfPairs) {
  EXPECT_DOUBLE_EQ(homogenization({"x y", "x y", "x y"}, [](auto& a, auto& b) { return rouge_l(a, b).f1; }), 1.0);
  auto len_sim = [](const std::string& a, const std::string& b) { return static_cast<double>(a.size() + b.size()); };
  EXPECT_DOUBLE_EQ(homogenization({"a", "bb", "ccc"}, len_sim), (3.0 + 4.0 + 5.0) / 3.0);
  EXPECT_EQ(code_of([&] { homogenization({"one"}, len_sim); }), ErrorCode::FewerThanTwo);
  EXPECT_EQ(code_of([&] { homogenization({}, len_sim); }), ErrorCode::FewerThanTwo);
}

TEST(Embedding, CosineBasics) {
  EXPECT_NEAR(cosine({1, 0}, {0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(cosine({1, 2}, {2, 4}), 1.0, 1e-12);
  EXPECT_NEAR(cosine({1, 0}, {-3, 0}), -1.0, 1e-12);
  EXPECT_EQ(code_of([] { cosine({0, 0}, {1, 1}); }), ErrorCode::ZeroVector);
  EXPECT_EQ(code_of([] { cosine({1}, {1, 1}); }), ErrorCode::InvalidArgument);
}

TEST(Embedding, StyleSimilarityUsesMeanReference) {
  TableProvider p({{"g", {1, 0}}, {"r1", {1, 1}}, {"r2", {1, -1}}, {"r3", {0, 2}}});
  EXPECT_NEAR(style_similarity("g", {"r1", "r2"}, p), 1.0, 1e-12);
  EXPECT_NEAR(style_similarity("g", {"r3"}, p), 0.0, 1e-12);
  EXPECT_EQ(code_of([&] { style_similarity("g", {}, p); }), ErrorCode::PreconditionViolated);
}

TEST(Embedding, HashingProviderProperties) {
  HashingEmbeddingProvider p(64);
  auto vs = p.embed({"The quick fox", "the QUICK fox", "another text entirely"});
  ASSERT_EQ(vs.size(), 3u);
  EXPECT_EQ(vs[0].size(), 64u);
  EXPECT_EQ(vs[0], vs[1]);
  EXPECT_NEAR(style_similarity("a b c", {"a b c"}, p), 1.0, 1e-12);
  // Scaling every reference by repetition of the same text leaves the mean unchanged.
  EXPECT_NEAR(style_similarity("a b", {"c d", "c d", "c d"}, p), style_similarity("a b", {"c d"}, p), 1e-12);
}

TEST(MetricRows, GroundTruthAndMethods) {
  AuthorProfile a;
  a.author_id = "a";
  a.profiling.push_back(make_story("a", {"p1"}, "old words here", 1));
  a.generation.push_back(make_story("a", {"wp1"}, "the cat sat", 2));
  a.generation.push_back(make_story("a", {"wp2"}, "a dog ran far", 3));
  std::vector<GeneratedStory> gens;
  auto gen = [&](GenerationMethod m, const std::string& wp, const std::string& text) {
    GeneratedStory g;
    g.author_id = "a";
    g.method = m;
    g.wp = {wp};
    g.text = text;
    gens.push_back(g);
  };
  gen(GenerationMethod::RAG, "wp1", "the cat");
  gen(GenerationMethod::RAG, "wp2", "a dog ran far");
  gen(GenerationMethod::Sheet, "wp1", "the cat sat");

  auto rows = compute_metric_rows({a}, gens, nullptr);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].method, "ground_truth");
  EXPECT_DOUBLE_EQ(rows[0].mean_length, 3.5);
  EXPECT_FALSE(rows[0].bleu.has_value());
  EXPECT_EQ(rows[1].method, "rag");
  EXPECT_NEAR(*rows[1].rouge_l_f, (0.8 + 1.0) / 2.0, 1e-12);
  EXPECT_TRUE(rows[1].homog_rouge.has_value());
  EXPECT_FALSE(rows[1].homog_embed.has_value());
  EXPECT_EQ(rows[2].method, "sheet");
  EXPECT_FALSE(rows[2].homog_rouge.has_value());  // single story for this author

  auto csv = metric_rows_to_csv(rows);
  EXPECT_EQ(csv.rfind("method,bleu,rouge_l,homog_rouge,homog_embed,style_history,style_story,mean_length\n", 0), 0u);
  EXPECT_NE(csv.find("sheet,1.0000,1.0000,NA,NA,NA,NA,3.0"), std::string::npos);

  HashingEmbeddingProvider p;
  auto with_embed = compute_metric_rows({a}, gens, &p);
  EXPECT_NEAR(*with_embed[2].style_story, 1.0, 1e-12);
  EXPECT_TRUE(with_embed[1].homog_embed.has_value());
  EXPECT_TRUE(with_embed[0].style_history.has_value());
}
