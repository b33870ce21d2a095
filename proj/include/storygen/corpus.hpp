#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace storygen {

class Gateway;

enum class SourceKind { Reddit, AO3, Storium, NMag, NYork };

inline constexpr std::array<SourceKind, 5> kAllSources = {
    SourceKind::Reddit, SourceKind::AO3, SourceKind::Storium, SourceKind::NMag, SourceKind::NYork};

struct SourceInfo {
  SourceKind id;
  std::string_view tag;  // dataset file spelling, e.g. "ao3"
  std::string_view display_name;
  std::string_view avg_prompt_key;
  std::string_view system_instruction_key;
  bool requires_metadata;
};

const SourceInfo& source_info(SourceKind source);
std::string_view source_tag(SourceKind source);
/// Throws Error{UnknownSource} for anything outside the five dataset tags.
SourceKind source_from_tag(std::string_view tag);

/// AO3 metadata (fandom, rating, warnings, relationships) or any other
/// per-story key/value annotations.
using Metadata = std::map<std::string, std::string>;

struct WritingPrompt {
  std::string text;
  SourceKind source = SourceKind::Reddit;

  friend bool operator==(const WritingPrompt&, const WritingPrompt&) = default;
};

struct Story {
  std::string author_id;
  WritingPrompt prompt;
  std::string text;
  int timestamp = 0;  // 1-based chronological index within the author
  std::size_t word_count = 0;
  std::optional<Metadata> metadata;
  std::optional<std::string> published;  // original date, opaque

  friend bool operator==(const Story&, const Story&) = default;
};

Story make_story(std::string author_id, WritingPrompt prompt, std::string text, int timestamp,
                 std::optional<Metadata> metadata = std::nullopt);

struct AuthorProfile {
  std::string author_id;
  SourceKind source = SourceKind::Reddit;
  std::vector<Story> profiling;
  std::vector<Story> generation;

  friend bool operator==(const AuthorProfile&, const AuthorProfile&) = default;
};

inline constexpr double kDefaultSplitRatio = 0.7;

struct Split {
  std::vector<Story> profiling;
  std::vector<Story> generation;
};

/// Profiling gets the first max(1, floor(ratio * n)) stories, capped so the
/// generation side keeps at least one.
Split chronological_split(const std::vector<Story>& stories, double ratio = kDefaultSplitRatio);

std::size_t profiling_count(std::size_t n, double ratio);

/// Parses a JSON Lines dataset, groups by author (first-appearance order),
/// re-indexes timestamps to 1..n and splits each author.
std::vector<AuthorProfile> load_dataset(const std::filesystem::path& path,
                                        double ratio = kDefaultSplitRatio);
std::vector<AuthorProfile> parse_dataset(std::string_view jsonl, double ratio = kDefaultSplitRatio);

/// Writes every story of every profile back out as JSON Lines.
void save_dataset(const std::vector<AuthorProfile>& profiles, const std::filesystem::path& path);
std::string dump_dataset(const std::vector<AuthorProfile>& profiles);

enum class Violation { TooShort, TooLong, MissingMetadata };

std::string_view violation_name(Violation v);

inline constexpr std::size_t kMinStoryWords = 500;
inline constexpr std::size_t kMaxStoryWords = 1500;

/// Advisory checks; an empty result means the story is fine.
std::vector<Violation> validate_story(const Story& story);

/// Asks the model for a 1-2 sentence writing prompt for a story that came
/// without one. Few-shot pairs are (story, prompt) demonstrations.
WritingPrompt enrich_prompt(std::string_view story_text, SourceKind source,
                            const std::vector<std::pair<std::string, std::string>>& fewshot,
                            Gateway& gateway);

}  // namespace storygen
