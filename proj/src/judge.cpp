#include "storygen/judge.hpp"

#include <random>

#include "parse_retry.hpp"
#include "storygen/error.hpp"
#include "storygen/prompts.hpp"
#include "storygen/text.hpp"

namespace storygen {

using json = nlohmann::json;

std::string_view judge_mode_key(JudgeMode mode) {
  return mode == JudgeMode::Faithfulness ? "faithfulness" : "similarity";
}

JudgeMode judge_mode_from_key(std::string_view key) {
  for (auto m : kAllJudgeModes) {
    if (judge_mode_key(m) == text::to_lower(key)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown judge mode \"" + std::string(key) + "\"");
}

std::array<std::string, 2> judge_labels(JudgeMode mode) {
  if (mode == JudgeMode::Faithfulness) return {"Story A", "Story B"};
  return {"Assistant A", "Assistant B"};
}

std::string_view winner_name(Winner w) {
  switch (w) {
    case Winner::Candidate: return "candidate";
    case Winner::Baseline: return "baseline";
    case Winner::Tie: return "tie";
  }
  return "";
}

std::string_view overall_name(Overall o) {
  switch (o) {
    case Overall::Win: return "win";
    case Overall::Loss: return "loss";
    case Overall::Tie: return "tie";
  }
  return "";
}

std::string_view presented_order_name(PresentedOrder o) {
  return o == PresentedOrder::CandidateFirst ? "candidate_first" : "baseline_first";
}

CategoryVerdict make_category_verdict(Category category, int score_candidate, int score_baseline) {
  CategoryVerdict v{category, score_candidate, score_baseline, Winner::Tie};
  if (score_candidate > score_baseline) v.winner = Winner::Candidate;
  if (score_candidate < score_baseline) v.winner = Winner::Baseline;
  return v;
}

void finalize_pair(PairVerdict& verdict) {
  verdict.total_candidate = 0;
  verdict.total_baseline = 0;
  for (const auto& c : verdict.categories) {
    verdict.total_candidate += c.score_candidate;
    verdict.total_baseline += c.score_baseline;
  }
  if (verdict.total_candidate > verdict.total_baseline) {
    verdict.overall = Overall::Win;
  } else if (verdict.total_candidate < verdict.total_baseline) {
    verdict.overall = Overall::Loss;
  } else {
    verdict.overall = Overall::Tie;
  }
}

PresentedOrder shuffle_order(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return (rng() >> 63) == 0 ? PresentedOrder::CandidateFirst : PresentedOrder::BaselineFirst;
}

ShuffledPair shuffle_pair(const std::string& candidate, const std::string& baseline, std::uint64_t seed) {
  const auto order = shuffle_order(seed);
  if (order == PresentedOrder::CandidateFirst) return {candidate, baseline, order};
  return {baseline, candidate, order};
}

std::pair<int, int> reattribute(PresentedOrder order, int score_a, int score_b) {
  if (order == PresentedOrder::CandidateFirst) return {score_a, score_b};
  return {score_b, score_a};
}

std::uint64_t derive_pair_seed(std::uint64_t run_seed, const std::string& author_id, const std::string& wp,
                               GenerationMethod method, JudgeMode mode) {
  std::string key = author_id;
  key += '\x1f';
  key += wp;
  key += '\x1f';
  key += method_key(method);
  key += '\x1f';
  key += judge_mode_key(mode);
  return text::fnv1a64(key, text::fnv1a64(std::to_string(run_seed)));
}

std::string faithfulness_reference(const WritingSheet& summary, Category category) {
  std::vector<std::string> lines;
  int i = 0;
  for (const auto& ce : summary[category]) lines.push_back(std::to_string(++i) + ". " + ce.claim);
  return text::join(lines, "\n");
}

std::pair<int, int> judge_category(JudgeMode mode, const WritingPrompt& wp, const std::string& reference,
                                   const std::string& story_a, const std::string& story_b, Category category,
                                   Gateway& gateway) {
  if (text::trim(reference).empty()) {
    throw Error(ErrorCode::PreconditionViolated,
                "empty judge reference for " + std::string(category_name(category)));
  }
  if (text::trim(story_a).empty() || text::trim(story_b).empty()) {
    throw Error(ErrorCode::PreconditionViolated, "cannot judge an empty story");
  }
  const auto labels = judge_labels(mode);
  const std::string aspect =
      std::string(category_long_name(category)) + ": " + std::string(category_description(category));
  prompts::SystemUser tmpl;
  std::string user;
  if (mode == JudgeMode::Faithfulness) {
    tmpl = prompts::faithfulness_judge();
    user = tmpl.user;
    user += "\n\nWriting Prompt: " + wp.text;
    user += "\n\nCategory: " + aspect;
    user += "\n\nAuthor Writing Sheet:\n" + reference;
    user += "\n\n" + labels[0] + ":\n" + story_a;
    user += "\n\n" + labels[1] + ":\n" + story_b;
  } else {
    tmpl = prompts::similarity_judge();
    user = tmpl.user;
    user += "\n\nWriting Prompt: " + wp.text;
    user += "\n\nSpecified Storytelling Aspect: " + aspect;
    user += "\n\nHuman-Written Story:\n" + reference;
    user += "\n\n" + labels[0] + ":\n" + story_a;
    user += "\n\n" + labels[1] + ":\n" + story_b;
  }
  auto request = make_request(Role::Judge, tmpl.system, std::move(user));
  const std::vector<std::string> label_list(labels.begin(), labels.end());
  try {
    return detail::complete_and_parse(gateway, request, ErrorCode::JudgeParseFailed, [&](const std::string& reply) {
      auto scores = parse_scores(extract_block(reply, "score"), label_list);
      return std::pair<int, int>{scores.at(labels[0]), scores.at(labels[1])};
    });
  } catch (Error& e) {
    if (e.code() == ErrorCode::JudgeParseFailed) {
      throw Error(ErrorCode::JudgeParseFailed, std::string(category_name(category)) + ": " + e.detail());
    }
    throw;
  }
}

PairVerdict judge_pair(JudgeMode mode, const JudgeReference& reference, const std::string& author_id,
                       const WritingPrompt& wp, GenerationMethod method, const std::string& candidate,
                       const std::string& baseline, std::uint64_t seed, Gateway& gateway) {
  try {
    if (mode == JudgeMode::Faithfulness && !reference.summary) {
      throw Error(ErrorCode::MissingArtifact, "faithfulness judging needs the author's summary sheet");
    }
    if (mode == JudgeMode::Similarity && !reference.ground_truth) {
      throw Error(ErrorCode::MissingArtifact, "similarity judging needs the ground-truth story");
    }
    PairVerdict v;
    v.author_id = author_id;
    v.source = wp.source;
    v.wp = wp.text;
    v.method = method;
    v.mode = mode;
    v.shuffle_seed = seed;
    const auto shuffled = shuffle_pair(candidate, baseline, seed);
    v.presented_order = shuffled.order;
    for (std::size_t i = 0; i < kCategories.size(); ++i) {
      const auto c = kCategories[i];
      const std::string ref =
          mode == JudgeMode::Faithfulness ? faithfulness_reference(*reference.summary, c) : *reference.ground_truth;
      const auto [a, b] = judge_category(mode, wp, ref, shuffled.first, shuffled.second, c, gateway);
      const auto [cand, base] = reattribute(shuffled.order, a, b);
      v.categories[i] = make_category_verdict(c, cand, base);
    }
    finalize_pair(v);
    return v;
  } catch (Error& e) {
    e.with_author(author_id).with_wp(wp.text);
    throw;
  }
}

// ---------------------------------------------------------------------------

namespace {

int round_half_up_percent(int count, int n) { return n == 0 ? 0 : (200 * count + n) / (2 * n); }

}  // namespace

int WinRateCell::win_rate() const { return round_half_up_percent(wins, n); }

int WinRateCell::loss_rate() const { return std::min(round_half_up_percent(losses, n), 100 - win_rate()); }

int WinRateCell::tie_rate() const { return n == 0 ? 0 : 100 - win_rate() - loss_rate(); }

std::string_view row_name(int row) {
  if (row == kOverallRow) return "Overall";
  return category_name(kCategories.at(static_cast<std::size_t>(row)));
}

WinRateReport aggregate(const std::vector<PairVerdict>& verdicts) {
  WinRateReport report;
  auto bump = [](WinRateCell& cell, int outcome) {
    ++cell.n;
    if (outcome > 0) ++cell.wins;
    if (outcome == 0) ++cell.ties;
    if (outcome < 0) ++cell.losses;
  };
  for (const auto& v : verdicts) {
    for (std::size_t i = 0; i < v.categories.size(); ++i) {
      const auto w = v.categories[i].winner;
      bump(report.cells[{v.source, v.method, v.mode, static_cast<int>(i)}],
           w == Winner::Candidate ? 1 : (w == Winner::Baseline ? -1 : 0));
    }
    bump(report.cells[{v.source, v.method, v.mode, kOverallRow}],
         v.overall == Overall::Win ? 1 : (v.overall == Overall::Loss ? -1 : 0));
  }
  return report;
}

std::string report_to_csv(const WinRateReport& report) {
  std::string out = "source,method,mode,category,wins,ties,losses,n,win_rate\n";
  for (const auto& [key, cell] : report.cells) {
    const auto& [source, method, mode, row] = key;
    out += std::string(source_tag(source)) + "," + std::string(method_key(method)) + "," +
           std::string(judge_mode_key(mode)) + "," + std::string(row_name(row)) + "," + std::to_string(cell.wins) +
           "," + std::to_string(cell.ties) + "," + std::to_string(cell.losses) + "," + std::to_string(cell.n) + "," +
           std::to_string(cell.win_rate()) + "\n";
  }
  return out;
}

json report_to_json(const WinRateReport& report) {
  json root = json::object();
  for (const auto& [key, cell] : report.cells) {
    const auto& [source, method, mode, row] = key;
    root[std::string(judge_mode_key(mode))][std::string(source_tag(source))][std::string(method_key(method))]
        [std::string(row_name(row))] = {
            {"wins", cell.wins},           {"ties", cell.ties},           {"losses", cell.losses},
            {"n", cell.n},                 {"win_rate", cell.win_rate()}, {"tie_rate", cell.tie_rate()},
            {"loss_rate", cell.loss_rate()},
        };
  }
  return root;
}

json verdict_to_json(const PairVerdict& v) {
  json cats = json::array();
  for (const auto& c : v.categories) {
    cats.push_back({{"category", category_name(c.category)},
                    {"score_candidate", c.score_candidate},
                    {"score_baseline", c.score_baseline},
                    {"winner", winner_name(c.winner)}});
  }
  return {
      {"author_id", v.author_id},
      {"source", source_tag(v.source)},
      {"wp", v.wp},
      {"method", method_key(v.method)},
      {"mode", judge_mode_key(v.mode)},
      {"categories", std::move(cats)},
      {"total_candidate", v.total_candidate},
      {"total_baseline", v.total_baseline},
      {"overall", overall_name(v.overall)},
      {"shuffle_seed", v.shuffle_seed},
      {"presented_order", presented_order_name(v.presented_order)},
      {"inputs_digest", v.inputs_digest},
  };
}

PairVerdict verdict_from_json(const json& j) {
  try {
    PairVerdict v;
    v.author_id = j.at("author_id").get<std::string>();
    v.source = source_from_tag(j.at("source").get<std::string>());
    v.wp = j.at("wp").get<std::string>();
    v.method = method_from_key(j.at("method").get<std::string>());
    v.mode = judge_mode_from_key(j.at("mode").get<std::string>());
    const auto& cats = j.at("categories");
    if (cats.size() != 4) throw Error(ErrorCode::MalformedRecord, "verdict needs 4 category entries");
    for (std::size_t i = 0; i < 4; ++i) {
      v.categories[i] = make_category_verdict(kCategories[i], cats[i].at("score_candidate").get<int>(),
                                              cats[i].at("score_baseline").get<int>());
    }
    v.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
    v.presented_order = j.at("presented_order").get<std::string>() == "candidate_first" ? PresentedOrder::CandidateFirst
                                                                                        : PresentedOrder::BaselineFirst;
    v.inputs_digest = j.value("inputs_digest", "");
    finalize_pair(v);
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("bad verdict JSON: ") + e.what());
  }
}

}  // namespace storygen
