#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace storygen {

enum class Category { Plot, Creativity, Development, LanguageUse };

inline constexpr std::array<Category, 4> kCategories = {Category::Plot, Category::Creativity,
                                                        Category::Development, Category::LanguageUse};

/// "Plot", "Creativity", "Development", "Language Use".
std::string_view category_name(Category c);
/// "Development (Character and Setting)" for Development, otherwise the short name.
std::string_view category_long_name(Category c);
/// One-line description used when asking a judge about a single category.
std::string_view category_description(Category c);
/// Machine key: "plot", "creativity", "development", "language_use".
std::string_view category_key(Category c);
std::optional<Category> category_from_key(std::string_view key);
/// Matches a heading label: case-insensitive, ignores bold markers, colons
/// and a trailing parenthetical.
std::optional<Category> match_category_heading(std::string_view label);

struct ClaimEvidence {
  std::string claim;
  std::string evidence;               // full evidence text, framing phrase included
  std::optional<std::string> framing;  // descriptor from "In the story regarding ..."
  std::optional<int> story_ref;        // the trailing [k]
  bool grouped = false;

  friend bool operator==(const ClaimEvidence&, const ClaimEvidence&) = default;
};

/// Builds a pair and derives `framing` from the evidence text.
ClaimEvidence make_claim_evidence(std::string claim, std::string evidence, std::optional<int> story_ref = std::nullopt,
                                  bool grouped = false);

/// Descriptor of an "In the story regarding "X," ..." evidence, if present.
std::optional<std::string> extract_framing(std::string_view evidence);

enum class SheetKind { Iterative, Summary };

std::string_view sheet_kind_name(SheetKind kind);

struct WritingSheet {
  SheetKind kind = SheetKind::Iterative;
  std::array<std::vector<ClaimEvidence>, 4> entries{};

  std::vector<ClaimEvidence>& operator[](Category c) { return entries[static_cast<std::size_t>(c)]; }
  const std::vector<ClaimEvidence>& operator[](Category c) const { return entries[static_cast<std::size_t>(c)]; }
  std::size_t total() const;
  bool empty() const { return total() == 0; }

  friend bool operator==(const WritingSheet&, const WritingSheet&) = default;
};

inline constexpr std::size_t kMaxClaimsPerCategory = 10;
inline constexpr std::size_t kMaxClaimsTotal = 40;

/// Content of the last <tag>...</tag> block, trimmed.
/// Throws Error{MissingTag} or Error{UnclosedTag}.
std::string extract_block(std::string_view text, std::string_view tag);

struct SheetParse {
  WritingSheet sheet;
  std::vector<std::string> warnings;
};

/// Parses the markdown sheet layout ("### Category", "1. **Claim**",
/// "- Evidence: ... [k]"). Throws Error{NoCategoriesFound} or
/// Error{ClaimWithoutEvidence}; anything else odd becomes a warning.
SheetParse parse_sheet(std::string_view block, SheetKind kind);

/// Canonical text layout; parse_sheet(render_sheet(s)) == s.
std::string render_sheet(const WritingSheet& sheet);

/// Finds "<label>: <int>" for every label; scores must be in 1..5.
/// Throws Error{LabelMissing} or Error{ScoreOutOfRange}.
std::map<std::string, int> parse_scores(std::string_view block, const std::vector<std::string>& labels);
std::string render_scores(const std::map<std::string, int>& scores, const std::vector<std::string>& labels);

/// Evidence that lacks the "In the story regarding" framing, or that merely
/// restates the claim.
bool detect_degenerate_evidence(const ClaimEvidence& pair);

}  // namespace storygen
