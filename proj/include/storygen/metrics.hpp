#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "storygen/corpus.hpp"
#include "storygen/generator.hpp"

namespace storygen {

/// Sentence-level BLEU-4 over lower-cased whitespace tokens. Zero n-gram
/// matches for n >= 2 get add-one smoothing; brevity penalty exp(1 - r/c).
double bleu(std::string_view candidate, std::string_view reference);

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

RougeL rouge_l(std::string_view candidate, std::string_view reference);

using PairSimilarity = std::function<double(const std::string&, const std::string&)>;

/// Mean similarity over all unordered pairs. Throws Error{FewerThanTwo}.
double homogenization(const std::vector<std::string>& stories, const PairSimilarity& sim);

std::size_t token_length(std::string_view text);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

/// Deterministic offline provider: signed feature hashing of lower-cased
/// tokens and token bigrams.
class HashingEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashingEmbeddingProvider(std::size_t dim = 256) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::size_t dim_;
};

/// POSTs {"texts": [...]} to an endpoint that answers {"vectors": [[...], ...]}.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string url, std::size_t dim, std::string api_key = {});
  std::size_t dim() const override { return dim_; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::string url_;
  std::size_t dim_;
  std::string api_key_;
};

/// Throws Error{ZeroVector} when either vector has zero norm.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Cosine between the generated text's embedding and the mean embedding of
/// the references.
double style_similarity(const std::string& generated, const std::vector<std::string>& references,
                        EmbeddingProvider& provider);

/// One row of the traditional-metrics table. Empty optionals print as NA.
struct MetricRow {
  std::string method;
  std::optional<double> bleu;
  std::optional<double> rouge_l_f;
  std::optional<double> homog_rouge;
  std::optional<double> homog_embed;
  std::optional<double> style_history;
  std::optional<double> style_story;
  double mean_length = 0.0;
};

/// A "ground_truth" row followed by one row per method present in `stories`
/// (in canonical method order). Homogenization is averaged over authors with
/// at least two generations of that method.
std::vector<MetricRow> compute_metric_rows(const std::vector<AuthorProfile>& profiles,
                                           const std::vector<GeneratedStory>& stories,
                                           EmbeddingProvider* provider);

std::string metric_rows_to_csv(const std::vector<MetricRow>& rows);

}  // namespace storygen
