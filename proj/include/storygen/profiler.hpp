#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "storygen/corpus.hpp"
#include "storygen/gateway.hpp"
#include "storygen/prompts.hpp"
#include "storygen/tagparse.hpp"

namespace storygen {

struct AverageStory {
  WritingPrompt prompt;
  std::string text;
  SourceKind source = SourceKind::Reddit;

  friend bool operator==(const AverageStory&, const AverageStory&) = default;
};

/// One step of the iterative build, kept for auditing.
struct SheetStep {
  int step = 0;
  AverageStory average;
  WritingSheet intermediate;
  WritingSheet combined;
};

struct SheetBuild {
  std::string author_id;
  WritingSheet sheet;
  std::vector<SheetStep> transcript;
};

AverageStory generate_average_story(const WritingPrompt& wp, Gateway& gateway,
                                    const prompts::PromptCatalog& catalog = prompts::PromptCatalog::defaults());

/// Contrasts the author's story with the average one. Retries once when the
/// reply cannot be parsed, then throws Error{SheetParseFailed}.
WritingSheet intermediate_sheet(const WritingPrompt& wp, const Story& author_story, const AverageStory& average,
                                Gateway& gateway);

/// Merges the running sheet with a new intermediate sheet and enforces the
/// per-category cap. Intermediate entries without a ref are tagged with `step`.
WritingSheet combine(const WritingSheet& prev, const WritingSheet& intermediate, int step, Gateway& gateway);

/// Deterministic clean-up applied to a merged sheet: drops degenerate pairs,
/// stamps missing refs with `step`, rejects refs above `step`, and keeps at
/// most kMaxClaimsPerCategory entries per category (grouped ones first).
WritingSheet finalize_combined(WritingSheet merged, int step);

/// Folds avg story -> intermediate sheet -> combine over the profiling set.
/// Issues exactly 3 * |P| gateway calls.
SheetBuild build_sheet(const AuthorProfile& profile, Gateway& gateway,
                       const prompts::PromptCatalog& catalog = prompts::PromptCatalog::defaults());

/// Single call over the whole profiling history. No cap is applied.
WritingSheet build_summary(const AuthorProfile& profile, Gateway& gateway);

// Persistence

nlohmann::json sheet_to_json(const WritingSheet& sheet, const std::string& author_id);
WritingSheet sheet_from_json(const nlohmann::json& j);
nlohmann::json transcript_to_json(const std::vector<SheetStep>& transcript);
std::vector<SheetStep> transcript_from_json(const nlohmann::json& j);

}  // namespace storygen
