#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "storygen/corpus.hpp"
#include "storygen/gateway.hpp"
#include "storygen/generator.hpp"
#include "storygen/tagparse.hpp"

namespace storygen {

enum class JudgeMode { Faithfulness, Similarity };

inline constexpr std::array<JudgeMode, 2> kAllJudgeModes = {JudgeMode::Faithfulness, JudgeMode::Similarity};

/// "faithfulness" / "similarity".
std::string_view judge_mode_key(JudgeMode mode);
JudgeMode judge_mode_from_key(std::string_view key);

/// Score labels the judge template uses for the first and second story.
std::array<std::string, 2> judge_labels(JudgeMode mode);

enum class Winner { Candidate, Baseline, Tie };
enum class Overall { Win, Loss, Tie };
enum class PresentedOrder { CandidateFirst, BaselineFirst };

std::string_view winner_name(Winner w);
std::string_view overall_name(Overall o);
std::string_view presented_order_name(PresentedOrder o);

struct CategoryVerdict {
  Category category = Category::Plot;
  int score_candidate = 0;
  int score_baseline = 0;
  Winner winner = Winner::Tie;

  friend bool operator==(const CategoryVerdict&, const CategoryVerdict&) = default;
};

CategoryVerdict make_category_verdict(Category category, int score_candidate, int score_baseline);

struct PairVerdict {
  std::string author_id;
  SourceKind source = SourceKind::Reddit;
  std::string wp;
  GenerationMethod method = GenerationMethod::Sheet;
  JudgeMode mode = JudgeMode::Faithfulness;
  std::array<CategoryVerdict, 4> categories{};
  int total_candidate = 0;
  int total_baseline = 0;
  Overall overall = Overall::Tie;
  std::uint64_t shuffle_seed = 0;
  PresentedOrder presented_order = PresentedOrder::CandidateFirst;
  /// Hash of the judged texts; lets a re-run skip unchanged pairs.
  std::string inputs_digest;

  friend bool operator==(const PairVerdict&, const PairVerdict&) = default;
};

/// Fills totals and the overall outcome from the four category verdicts.
void finalize_pair(PairVerdict& verdict);

/// Seeded fair coin deciding which story is shown as A.
PresentedOrder shuffle_order(std::uint64_t seed);

struct ShuffledPair {
  std::string first;
  std::string second;
  PresentedOrder order;
};

ShuffledPair shuffle_pair(const std::string& candidate, const std::string& baseline, std::uint64_t seed);

/// Maps (score of A, score of B) back to (candidate, baseline).
std::pair<int, int> reattribute(PresentedOrder order, int score_a, int score_b);

/// Per-pair seed derived from the run seed and the pair's identity.
std::uint64_t derive_pair_seed(std::uint64_t run_seed, const std::string& author_id, const std::string& wp,
                               GenerationMethod method, JudgeMode mode);

/// Numbered claims (no evidence) of one category of the summary sheet.
std::string faithfulness_reference(const WritingSheet& summary, Category category);

/// One judge call for one category; returns (score of A, score of B).
/// Retries once on a malformed score block, then Error{JudgeParseFailed}.
std::pair<int, int> judge_category(JudgeMode mode, const WritingPrompt& wp, const std::string& reference,
                                   const std::string& story_a, const std::string& story_b, Category category,
                                   Gateway& gateway);

/// What the judge compares against: the summary sheet for Faithfulness,
/// the ground-truth story for Similarity.
struct JudgeReference {
  std::optional<WritingSheet> summary;
  std::optional<std::string> ground_truth;
};

PairVerdict judge_pair(JudgeMode mode, const JudgeReference& reference, const std::string& author_id,
                       const WritingPrompt& wp, GenerationMethod method, const std::string& candidate,
                       const std::string& baseline, std::uint64_t seed, Gateway& gateway);

// Aggregation

struct WinRateCell {
  int wins = 0;
  int ties = 0;
  int losses = 0;
  int n = 0;

  /// Integer percentages: win rounded half-up, loss rounded half-up but
  /// capped so the three sum to 100, ties take the remainder.
  int win_rate() const;
  int loss_rate() const;
  int tie_rate() const;

  friend bool operator==(const WinRateCell&, const WinRateCell&) = default;
};

/// Row index 0..3 is a category, kOverallRow is the total-score outcome.
inline constexpr int kOverallRow = 4;

using WinRateKey = std::tuple<SourceKind, GenerationMethod, JudgeMode, int>;

struct WinRateReport {
  std::map<WinRateKey, WinRateCell> cells;
};

std::string_view row_name(int row);

WinRateReport aggregate(const std::vector<PairVerdict>& verdicts);

std::string report_to_csv(const WinRateReport& report);
nlohmann::json report_to_json(const WinRateReport& report);

nlohmann::json verdict_to_json(const PairVerdict& verdict);
PairVerdict verdict_from_json(const nlohmann::json& j);

}  // namespace storygen
