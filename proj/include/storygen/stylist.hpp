#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "storygen/corpus.hpp"
#include "storygen/gateway.hpp"
#include "storygen/profiler.hpp"
#include "storygen/tagparse.hpp"

namespace storygen {

/// Four second-person paragraphs, one per category in canonical order.
struct PersonaDescription {
  std::array<std::string, 4> paragraphs{};

  const std::string& operator[](Category c) const { return paragraphs[static_cast<std::size_t>(c)]; }
  std::string& operator[](Category c) { return paragraphs[static_cast<std::size_t>(c)]; }
  /// Non-empty paragraphs joined by blank lines.
  std::string full_text() const;
  std::size_t paragraph_count() const;

  friend bool operator==(const PersonaDescription&, const PersonaDescription&) = default;
};

enum class RulesProvenance { FromSheet, FromSummary, Contrast, FewShotTransfer };

std::string_view provenance_name(RulesProvenance p);
RulesProvenance provenance_from_name(std::string_view name);

struct StoryRules {
  std::array<std::vector<std::string>, 4> directives{};
  RulesProvenance provenance = RulesProvenance::FromSheet;

  const std::vector<std::string>& operator[](Category c) const { return directives[static_cast<std::size_t>(c)]; }
  std::vector<std::string>& operator[](Category c) { return directives[static_cast<std::size_t>(c)]; }
  std::size_t total() const;

  friend bool operator==(const StoryRules&, const StoryRules&) = default;
};

/// Splits a persona block on blank lines. Throws Error{PersonaParseFailed}
/// unless there are exactly four paragraphs.
PersonaDescription parse_persona(std::string_view block);

/// Reads "**Plot:**" style headings followed by bullet directives. All four
/// headings must be present and at least one directive overall, otherwise
/// Error{RulesParseFailed}.
StoryRules parse_rules(std::string_view block, RulesProvenance provenance);
std::string render_rules(const StoryRules& rules);

PersonaDescription generate_persona(const WritingSheet& sheet, Gateway& gateway);

StoryRules rules_from_sheet(const WritingSheet& sheet, const WritingPrompt& wp, Gateway& gateway);

StoryRules rules_by_contrast(const WritingPrompt& wp, const Story& author_story, const AverageStory& average,
                             Gateway& gateway);

/// Transfers contrast rules to a new prompt using (prompt, rules) pairs as
/// few-shot turns. `max_pairs` keeps only the most recent pairs.
StoryRules rules_fewshot_transfer(const std::vector<std::pair<WritingPrompt, StoryRules>>& profiling_rules,
                                  const WritingPrompt& new_wp, Gateway& gateway,
                                  std::optional<std::size_t> max_pairs = std::nullopt);

struct Ablated {
  StoryRules rules;
  std::optional<PersonaDescription> persona;
};

/// Clears one category from the rules and the persona.
Ablated ablate(StoryRules rules, std::optional<PersonaDescription> persona, Category excluded);

nlohmann::json persona_to_json(const PersonaDescription& persona);
PersonaDescription persona_from_json(const nlohmann::json& j);
nlohmann::json rules_to_json(const StoryRules& rules);
StoryRules rules_from_json(const nlohmann::json& j);

}  // namespace storygen
