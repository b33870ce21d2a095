#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "storygen/corpus.hpp"
#include "storygen/gateway.hpp"
#include "storygen/profiler.hpp"
#include "storygen/prompts.hpp"
#include "storygen/stylist.hpp"

namespace storygen {

enum class GenerationMethod { AverageAuthor, RAG, Delta, Sheet, SheetNoPersona, Summ, SummNoPersona, Oracle };

inline constexpr std::array<GenerationMethod, 8> kAllMethods = {
    GenerationMethod::AverageAuthor, GenerationMethod::RAG,  GenerationMethod::Delta,
    GenerationMethod::Sheet,         GenerationMethod::SheetNoPersona, GenerationMethod::Summ,
    GenerationMethod::SummNoPersona, GenerationMethod::Oracle};

/// "average_author", "rag", "delta", "sheet", "sheet_np", "summ", "summ_np", "oracle".
std::string_view method_key(GenerationMethod m);
/// "Average Author", "RAG", "Delta", "Sheet", "Sheet-nP", "Summ", "Summ-nP", "Oracle".
std::string_view method_display_name(GenerationMethod m);
/// Accepts the key or the display name. Throws Error{InvalidArgument}.
GenerationMethod method_from_key(std::string_view key);

bool method_uses_persona(GenerationMethod m);
/// Provenance the method's rules must carry, if it uses rules at all.
std::optional<RulesProvenance> method_rules_provenance(GenerationMethod m);

struct GenerationConfig {
  std::size_t k_shots = 1;
  std::optional<std::size_t> story_length_words;
  std::optional<Category> excluded_category;
  SamplingConfig sampling = default_sampling(Role::StoryGen);
  /// Delta gets retrieved demonstrations only when this is set.
  bool delta_demos = false;
};

/// The prompt being written for, plus what is known about its ground truth.
struct GenerationTarget {
  WritingPrompt wp;
  std::optional<Metadata> metadata;
  std::optional<std::size_t> reference_words;
};

GenerationTarget target_from_story(const Story& ground_truth);

struct PromptArtifacts {
  std::optional<PersonaDescription> persona;
  std::optional<StoryRules> rules;
  std::vector<Story> demos;
};

/// Top-k profiling stories whose prompts best match `wp` (BM25), best first.
/// Throws Error{InvalidArgument} when k exceeds the profiling set.
std::vector<Story> select_demonstrations(const AuthorProfile& profile, const WritingPrompt& wp, std::size_t k);

/// Word target: config override, else the ground truth's length, else the
/// mean profiling length.
std::size_t resolve_story_length(const AuthorProfile& profile, const GenerationTarget& target,
                                 const GenerationConfig& config);

std::string render_metadata(const Metadata& metadata);

/// Builds the story-generation request. Throws Error{MissingArtifact} when a
/// piece the method needs is absent or of the wrong provenance, and
/// Error{MetadataRequired} for AO3 targets without metadata.
ChatRequest assemble_prompt(GenerationMethod method, const AuthorProfile& author, const GenerationTarget& target,
                            const PromptArtifacts& artifacts, const GenerationConfig& config,
                            const prompts::PromptCatalog& catalog = prompts::PromptCatalog::defaults());

/// Everything stylize produced for one author. Rules maps are keyed by the
/// target writing prompt text.
struct ArtifactStore {
  std::optional<WritingSheet> sheet;
  std::optional<WritingSheet> summary;
  std::optional<PersonaDescription> sheet_persona;
  std::optional<PersonaDescription> summary_persona;
  std::map<std::string, StoryRules> sheet_rules;
  std::map<std::string, StoryRules> summary_rules;
  std::map<std::string, StoryRules> delta_rules;
  std::map<std::string, StoryRules> oracle_rules;
};

struct GeneratedStory {
  std::string author_id;
  SourceKind source = SourceKind::Reddit;
  WritingPrompt wp;
  GenerationMethod method = GenerationMethod::AverageAuthor;
  std::string text;
  std::string inputs_digest;
  std::size_t word_count = 0;

  friend bool operator==(const GeneratedStory&, const GeneratedStory&) = default;
};

/// Gathers the method's artifacts from the store (applying the configured
/// ablation) and returns what assemble_prompt would send.
ChatRequest prepare_request(GenerationMethod method, const AuthorProfile& author, const GenerationTarget& target,
                            const ArtifactStore& store, const GenerationConfig& config,
                            const prompts::PromptCatalog& catalog = prompts::PromptCatalog::defaults());

GeneratedStory generate_story(GenerationMethod method, const AuthorProfile& author, const GenerationTarget& target,
                              const ArtifactStore& store, const GenerationConfig& config, Gateway& gateway,
                              const prompts::PromptCatalog& catalog = prompts::PromptCatalog::defaults());

nlohmann::json generated_to_json(const GeneratedStory& story);
GeneratedStory generated_from_json(const nlohmann::json& j);

}  // namespace storygen
