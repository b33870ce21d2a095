#pragma once

#include <map>
#include <string>
#include <string_view>

#include "storygen/corpus.hpp"

// Prompt texts for every model call in the pipeline.
namespace storygen::prompts {

struct SystemUser {
  std::string system;
  std::string user;
};

/// Source-specific "typical writer" prompts, keyed by source. A catalog may
/// be built without some sources to model an unregistered template.
class PromptCatalog {
 public:
  static const PromptCatalog& defaults();

  void set_average_author(SourceKind source, SystemUser tmpl);
  void set_role_play_instruction(SourceKind source, std::string instruction);

  /// Throws Error{UnknownSourceTemplate}.
  const SystemUser& average_author(SourceKind source) const;
  const std::string& role_play_instruction(SourceKind source) const;

 private:
  std::map<SourceKind, SystemUser> average_author_;
  std::map<SourceKind, std::string> role_play_;
};

SystemUser intermediate_sheet();
SystemUser combine_sheets();
SystemUser writing_summary();
SystemUser persona();
SystemUser rules_from_sheet();
SystemUser rules_by_contrast();
SystemUser rules_fewshot();
SystemUser faithfulness_judge();
SystemUser similarity_judge();
SystemUser enrich_prompt();

/// System-prompt paragraph telling the story model to follow rules/demos.
std::string_view story_rules_adherence();
std::string_view story_demos_adherence();
std::string_view persona_lead_in();
std::string_view metadata_lead_in();

/// "Write a short story ... <n> words long ..." instruction.
std::string story_instruction(std::size_t words);

}  // namespace storygen::prompts
