#include "storygen/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "storygen/error.hpp"

namespace storygen {

std::vector<std::string> bm25_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || u >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Bm25Index Bm25Index::build(const std::vector<std::pair<int, std::string>>& docs, Bm25Params params) {
  if (docs.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot index an empty document list");
  Bm25Index index;
  index.params_ = params;
  std::set<int> seen;
  std::size_t total = 0;
  for (const auto& [id, text] : docs) {
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateDocId, "duplicate document id " + std::to_string(id));
    Bm25Doc d;
    d.id = id;
    d.tokens = bm25_tokenize(text);
    for (const auto& t : d.tokens) ++d.tf[t];
    for (const auto& [t, _] : d.tf) ++index.df_[t];
    total += d.tokens.size();
    index.docs_.push_back(std::move(d));
  }
  index.avgdl_ = static_cast<double>(total) / static_cast<double>(index.docs_.size());
  return index;
}

int Bm25Index::df(const std::string& term) const {
  auto it = df_.find(term);
  return it == df_.end() ? 0 : it->second;
}

double Bm25Index::idf(const std::string& term) const {
  const double n = static_cast<double>(docs_.size());
  const double d = df(term);
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

double Bm25Index::score(std::size_t doc_index, const std::vector<std::string>& unique_terms) const {
  const auto& doc = docs_.at(doc_index);
  // All-empty documents leave avgdl at 0; length normalisation is moot then.
  const double norm = avgdl_ > 0 ? static_cast<double>(doc.tokens.size()) / avgdl_ : 0.0;
  double s = 0.0;
  for (const auto& t : unique_terms) {
    auto it = doc.tf.find(t);
    if (it == doc.tf.end()) continue;
    const double tf = it->second;
    s += idf(t) * (tf * (params_.k1 + 1.0)) / (tf + params_.k1 * (1.0 - params_.b + params_.b * norm));
  }
  return s;
}

std::vector<RankedHit> Bm25Index::top_k(std::string_view query, std::size_t k) const {
  auto tokens = bm25_tokenize(query);
  std::set<std::string> uniq(tokens.begin(), tokens.end());
  std::vector<std::string> terms(uniq.begin(), uniq.end());

  std::vector<RankedHit> hits;
  hits.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) hits.push_back({docs_[i].id, score(i, terms)});
  std::sort(hits.begin(), hits.end(), [](const RankedHit& a, const RankedHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  hits.resize(std::min(k, hits.size()));
  return hits;
}

}  // namespace storygen
