#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace storygen {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Lower-cased runs of alphanumeric characters. Non-ASCII bytes are kept as
/// word characters so accented words stay whole.
std::vector<std::string> bm25_tokenize(std::string_view text);

struct Bm25Doc {
  int id = 0;
  std::vector<std::string> tokens;
  std::map<std::string, int> tf;
};

struct RankedHit {
  int doc_id = 0;
  double score = 0.0;
};

/// Immutable BM25 index over short texts (writing prompts).
class Bm25Index {
 public:
  /// Throws Error{EmptyCorpus} or Error{DuplicateDocId}.
  static Bm25Index build(const std::vector<std::pair<int, std::string>>& docs, Bm25Params params = {});

  /// Top min(k, N) documents by score, ties broken by ascending id.
  /// Repeated query terms count once.
  std::vector<RankedHit> top_k(std::string_view query, std::size_t k) const;

  double score(std::size_t doc_index, const std::vector<std::string>& unique_terms) const;
  double idf(const std::string& term) const;

  std::size_t size() const { return docs_.size(); }
  double avgdl() const { return avgdl_; }
  int df(const std::string& term) const;
  const std::vector<Bm25Doc>& docs() const { return docs_; }
  const Bm25Params& params() const { return params_; }

 private:
  std::vector<Bm25Doc> docs_;
  std::map<std::string, int> df_;
  double avgdl_ = 0.0;
  Bm25Params params_;
};

}  // namespace storygen
