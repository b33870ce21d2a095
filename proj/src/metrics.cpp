#include "storygen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/fmt/fmt.h>

#include "storygen/error.hpp"
#include "storygen/http_backend.hpp"
#include "storygen/text.hpp"

namespace storygen {

using json = nlohmann::json;

namespace {

std::vector<std::string> folded_tokens(std::string_view s) { return text::split_whitespace(text::to_lower(s)); }

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<std::vector<std::string>, int> out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

}  // namespace

double bleu(std::string_view candidate, std::string_view reference) {
  const auto cand = folded_tokens(candidate);
  const auto ref = folded_tokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto c_counts = ngram_counts(cand, n);
    const auto r_counts = ngram_counts(ref, n);
    int matches = 0;
    int total = 0;
    for (const auto& [gram, count] : c_counts) {
      total += count;
      auto it = r_counts.find(gram);
      if (it != r_counts.end()) matches += std::min(count, it->second);
    }
    double p;
    if (matches > 0) {
      p = static_cast<double>(matches) / total;
    } else if (n >= 2) {
      p = 1.0 / (total + 1);
    } else {
      return 0.0;
    }
    log_sum += std::log(p) / 4.0;
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum);
}

RougeL rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = folded_tokens(candidate);
  const auto ref = folded_tokens(reference);
  RougeL out;
  if (cand.empty() || ref.empty()) return out;
  std::vector<std::size_t> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
  for (std::size_t i = 1; i <= cand.size(); ++i) {
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[ref.size()]);
  out.precision = lcs / static_cast<double>(cand.size());
  out.recall = lcs / static_cast<double>(ref.size());
  if (out.precision + out.recall > 0) out.f1 = 2 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

double homogenization(const std::vector<std::string>& stories, const PairSimilarity& sim) {
  if (stories.size() < 2) {
    throw Error(ErrorCode::FewerThanTwo, "homogenization needs at least 2 stories, got " + std::to_string(stories.size()));
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < stories.size(); ++i) {
    for (std::size_t j = i + 1; j < stories.size(); ++j) {
      sum += sim(stories[i], stories[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

std::size_t token_length(std::string_view s) { return text::word_count(s); }

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> HashingEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::vector<double> v(dim_, 0.0);
    const auto tokens = folded_tokens(t);
    auto add = [&](std::string_view feature, double weight) {
      const auto h = text::fnv1a64(feature);
      v[h % dim_] += (h >> 63) ? weight : -weight;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      add(tokens[i], 1.0);
      if (i + 1 < tokens.size()) add(tokens[i] + ' ' + tokens[i + 1], 0.5);
    }
    out.push_back(std::move(v));
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string url, std::size_t dim, std::string api_key)
    : url_(std::move(url)), dim_(dim), api_key_(std::move(api_key)) {
  parse_endpoint(url_);
}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  const auto endpoint = parse_endpoint(url_);
  httplib::Client client(endpoint.scheme_host_port);
  client.set_read_timeout(std::chrono::seconds(120));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(endpoint.path, headers, json{{"texts", texts}}.dump(), "application/json");
  if (!res) throw Error(ErrorCode::NetworkError, "embedding endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::ProviderError, "embedding endpoint returned HTTP " + std::to_string(res->status));
  }
  std::vector<std::vector<double>> vectors;
  try {
    vectors = json::parse(res->body).at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderError, std::string("bad embedding response: ") + e.what());
  }
  if (vectors.size() != texts.size()) throw Error(ErrorCode::ProviderError, "embedding count mismatch");
  for (const auto& v : vectors) {
    if (v.size() != dim_) throw Error(ErrorCode::ProviderError, "embedding has unexpected dimension");
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::ProviderError, "embedding contains a non-finite value");
    }
  }
  return vectors;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "vectors differ in dimension");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) throw Error(ErrorCode::ZeroVector, "cannot take the cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace {

std::vector<double> mean_vector(const std::vector<std::vector<double>>& vs) {
  std::vector<double> mean(vs.front().size(), 0.0);
  for (const auto& v : vs) {
    for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i];
  }
  for (auto& x : mean) x /= static_cast<double>(vs.size());
  return mean;
}

// Embeds each distinct text once.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(EmbeddingProvider& provider) : provider_(provider) {}

  const std::vector<double>& get(const std::string& t) {
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
    auto v = provider_.embed({t});
    return cache_.emplace(t, std::move(v.at(0))).first->second;
  }

  double similarity(const std::string& generated, const std::vector<std::string>& refs) {
    std::vector<std::vector<double>> vs;
    for (const auto& r : refs) vs.push_back(get(r));
    return cosine(get(generated), mean_vector(vs));
  }

 private:
  EmbeddingProvider& provider_;
  std::map<std::string, std::vector<double>> cache_;
};

}  // namespace

double style_similarity(const std::string& generated, const std::vector<std::string>& references,
                        EmbeddingProvider& provider) {
  if (references.empty()) throw Error(ErrorCode::PreconditionViolated, "style similarity needs references");
  std::vector<std::string> texts{generated};
  texts.insert(texts.end(), references.begin(), references.end());
  auto vs = provider.embed(texts);
  const auto gen = vs.front();
  vs.erase(vs.begin());
  return cosine(gen, mean_vector(vs));
}

// ---------------------------------------------------------------------------

namespace {

struct Accumulator {
  double sum = 0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> mean() const { return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt; }
};

}  // namespace

std::vector<MetricRow> compute_metric_rows(const std::vector<AuthorProfile>& profiles,
                                           const std::vector<GeneratedStory>& stories, EmbeddingProvider* provider) {
  std::map<std::string, const AuthorProfile*> by_author;
  std::map<std::pair<std::string, std::string>, const Story*> ground_truth;
  for (const auto& p : profiles) {
    by_author[p.author_id] = &p;
    for (const auto& s : p.generation) ground_truth[{p.author_id, s.prompt.text}] = &s;
  }
  std::optional<EmbeddingCache> cache;
  if (provider) cache.emplace(*provider);

  auto history_of = [&](const std::string& author) {
    std::vector<std::string> out;
    auto it = by_author.find(author);
    if (it != by_author.end()) {
      for (const auto& s : it->second->profiling) out.push_back(s.text);
    }
    return out;
  };

  // Homogenization over per-author groups, averaged across authors.
  auto homog_rows = [&](const std::map<std::string, std::vector<std::string>>& groups, MetricRow& row) {
    Accumulator rouge, embed;
    for (const auto& [author, texts] : groups) {
      if (texts.size() < 2) continue;
      rouge.add(homogenization(texts, [](const std::string& a, const std::string& b) { return rouge_l(a, b).f1; }));
      if (cache) {
        embed.add(homogenization(texts, [&](const std::string& a, const std::string& b) {
          return cosine(cache->get(a), cache->get(b));
        }));
      }
    }
    row.homog_rouge = rouge.mean();
    row.homog_embed = embed.mean();
  };

  std::vector<MetricRow> rows;
  {
    MetricRow gt;
    gt.method = "ground_truth";
    Accumulator length, history;
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& p : profiles) {
      for (const auto& s : p.generation) {
        length.add(static_cast<double>(token_length(s.text)));
        groups[p.author_id].push_back(s.text);
        if (cache && !p.profiling.empty()) history.add(cache->similarity(s.text, history_of(p.author_id)));
      }
    }
    homog_rows(groups, gt);
    gt.style_history = history.mean();
    gt.mean_length = length.mean().value_or(0.0);
    rows.push_back(std::move(gt));
  }

  for (auto method : kAllMethods) {
    MetricRow row;
    row.method = std::string(method_key(method));
    Accumulator b, r, length, history, story;
    std::map<std::string, std::vector<std::string>> groups;
    bool any = false;
    for (const auto& g : stories) {
      if (g.method != method) continue;
      any = true;
      length.add(static_cast<double>(token_length(g.text)));
      groups[g.author_id].push_back(g.text);
      auto gt = ground_truth.find({g.author_id, g.wp.text});
      if (gt != ground_truth.end()) {
        b.add(bleu(g.text, gt->second->text));
        r.add(rouge_l(g.text, gt->second->text).f1);
        if (cache) story.add(cache->similarity(g.text, {gt->second->text}));
      }
      if (cache) {
        auto hist = history_of(g.author_id);
        if (!hist.empty()) history.add(cache->similarity(g.text, hist));
      }
    }
    if (!any) continue;
    row.bleu = b.mean();
    row.rouge_l_f = r.mean();
    homog_rows(groups, row);
    row.style_history = history.mean();
    row.style_story = story.mean();
    row.mean_length = length.mean().value_or(0.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string metric_rows_to_csv(const std::vector<MetricRow>& rows) {
  auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("NA"); };
  std::string out = "method,bleu,rouge_l,homog_rouge,homog_embed,style_history,style_story,mean_length\n";
  for (const auto& r : rows) {
    out += r.method + "," + cell(r.bleu) + "," + cell(r.rouge_l_f) + "," + cell(r.homog_rouge) + "," +
           cell(r.homog_embed) + "," + cell(r.style_history) + "," + cell(r.style_story) + "," +
           fmt::format("{:.1f}", r.mean_length) + "\n";
  }
  return out;
}

}  // namespace storygen
