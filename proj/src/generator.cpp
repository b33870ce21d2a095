#include "storygen/generator.hpp"

#include <cmath>

#include "storygen/error.hpp"
#include "storygen/retrieval.hpp"
#include "storygen/text.hpp"

namespace storygen {

using json = nlohmann::json;

std::string_view method_key(GenerationMethod m) {
  switch (m) {
    case GenerationMethod::AverageAuthor: return "average_author";
    case GenerationMethod::RAG: return "rag";
    case GenerationMethod::Delta: return "delta";
    case GenerationMethod::Sheet: return "sheet";
    case GenerationMethod::SheetNoPersona: return "sheet_np";
    case GenerationMethod::Summ: return "summ";
    case GenerationMethod::SummNoPersona: return "summ_np";
    case GenerationMethod::Oracle: return "oracle";
  }
  return "";
}

std::string_view method_display_name(GenerationMethod m) {
  switch (m) {
    case GenerationMethod::AverageAuthor: return "Average Author";
    case GenerationMethod::RAG: return "RAG";
    case GenerationMethod::Delta: return "Delta";
    case GenerationMethod::Sheet: return "Sheet";
    case GenerationMethod::SheetNoPersona: return "Sheet-nP";
    case GenerationMethod::Summ: return "Summ";
    case GenerationMethod::SummNoPersona: return "Summ-nP";
    case GenerationMethod::Oracle: return "Oracle";
  }
  return "";
}

GenerationMethod method_from_key(std::string_view key) {
  const auto lowered = text::to_lower(key);
  for (auto m : kAllMethods) {
    if (method_key(m) == lowered || text::to_lower(method_display_name(m)) == lowered) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown generation method \"" + std::string(key) + "\"");
}

bool method_uses_persona(GenerationMethod m) { return m == GenerationMethod::Sheet || m == GenerationMethod::Summ; }

std::optional<RulesProvenance> method_rules_provenance(GenerationMethod m) {
  switch (m) {
    case GenerationMethod::Delta: return RulesProvenance::FewShotTransfer;
    case GenerationMethod::Sheet:
    case GenerationMethod::SheetNoPersona: return RulesProvenance::FromSheet;
    case GenerationMethod::Summ:
    case GenerationMethod::SummNoPersona: return RulesProvenance::FromSummary;
    case GenerationMethod::Oracle: return RulesProvenance::Contrast;
    default: return std::nullopt;
  }
}

namespace {

bool method_takes_demos(GenerationMethod m, const GenerationConfig& config) {
  switch (m) {
    case GenerationMethod::AverageAuthor: return false;
    case GenerationMethod::Delta: return config.delta_demos;
    default: return true;
  }
}

Error missing(GenerationMethod m, const std::string& what) {
  return Error(ErrorCode::MissingArtifact, std::string(method_display_name(m)) + " needs " + what);
}

}  // namespace

GenerationTarget target_from_story(const Story& ground_truth) {
  return {ground_truth.prompt, ground_truth.metadata, text::word_count(ground_truth.text)};
}

std::vector<Story> select_demonstrations(const AuthorProfile& profile, const WritingPrompt& wp, std::size_t k) {
  if (k == 0) return {};
  if (k > profile.profiling.size()) {
    throw Error(ErrorCode::InvalidArgument, "asked for " + std::to_string(k) + " demonstrations but the profiling set has " +
                                                std::to_string(profile.profiling.size()));
  }
  std::vector<std::pair<int, std::string>> docs;
  std::map<int, const Story*> by_id;
  for (const auto& s : profile.profiling) {
    docs.emplace_back(s.timestamp, s.prompt.text);
    by_id[s.timestamp] = &s;
  }
  auto index = Bm25Index::build(docs);
  std::vector<Story> out;
  for (const auto& hit : index.top_k(wp.text, k)) out.push_back(*by_id.at(hit.doc_id));
  return out;
}

std::size_t resolve_story_length(const AuthorProfile& profile, const GenerationTarget& target,
                                 const GenerationConfig& config) {
  if (config.story_length_words) {
    if (*config.story_length_words == 0) throw Error(ErrorCode::InvalidArgument, "story length must be positive");
    return *config.story_length_words;
  }
  if (target.reference_words && *target.reference_words > 0) return *target.reference_words;
  if (profile.profiling.empty()) throw Error(ErrorCode::PreconditionViolated, "no length reference for the story");
  double total = 0;
  for (const auto& s : profile.profiling) total += static_cast<double>(text::word_count(s.text));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(total / static_cast<double>(profile.profiling.size()))));
}

std::string render_metadata(const Metadata& metadata) {
  std::vector<std::string> parts;
  for (const auto& [k, v] : metadata) parts.push_back(k + ": " + v);
  return text::join(parts, "; ");
}

ChatRequest assemble_prompt(GenerationMethod method, const AuthorProfile& author, const GenerationTarget& target,
                            const PromptArtifacts& artifacts, const GenerationConfig& config,
                            const prompts::PromptCatalog& catalog) {
  const auto source = target.wp.source;
  const bool needs_metadata = source_info(source).requires_metadata;
  if (needs_metadata && (!target.metadata || target.metadata->empty())) {
    throw Error(ErrorCode::MetadataRequired, std::string(source_info(source).display_name) +
                                                 " stories need metadata (fandom, rating, warnings, relationships)");
  }
  const auto words = resolve_story_length(author, target, config);

  std::string user = prompts::story_instruction(words);
  if (needs_metadata) user += "\n\n" + std::string(prompts::metadata_lead_in()) + render_metadata(*target.metadata);
  user += "\n\nWriting Prompt: " + target.wp.text;

  if (method == GenerationMethod::AverageAuthor) {
    const auto& tmpl = catalog.average_author(source);
    auto req = make_request(Role::StoryGen, tmpl.system, tmpl.user + "\n\n" + user);
    req.sampling = config.sampling;
    return req;
  }

  const auto want = method_rules_provenance(method);
  const StoryRules* rules = nullptr;
  if (want) {
    if (!artifacts.rules) throw missing(method, "story rules");
    if (artifacts.rules->provenance != *want) {
      throw missing(method, "rules of provenance " + std::string(provenance_name(*want)) + ", got " +
                                std::string(provenance_name(artifacts.rules->provenance)));
    }
    rules = &*artifacts.rules;
  }
  const PersonaDescription* persona = nullptr;
  if (method_uses_persona(method)) {
    if (!artifacts.persona || artifacts.persona->paragraph_count() == 0) throw missing(method, "a persona description");
    persona = &*artifacts.persona;
  }
  const bool use_demos = method_takes_demos(method, config) && !artifacts.demos.empty();
  if (method == GenerationMethod::RAG && !use_demos) throw missing(method, "at least one retrieved demonstration");

  std::string system = catalog.role_play_instruction(source);
  if (rules) system += "\n\n" + std::string(prompts::story_rules_adherence());
  if (use_demos) system += (rules ? " " : "\n\n") + std::string(prompts::story_demos_adherence());
  if (persona) system += "\n\n" + std::string(prompts::persona_lead_in()) + persona->full_text();

  std::vector<FewShotTurn> turns;
  if (use_demos) {
    for (const auto& demo : artifacts.demos) {
      std::string u = prompts::story_instruction(text::word_count(demo.text));
      if (needs_metadata && demo.metadata && !demo.metadata->empty()) {
        u += "\n\n" + std::string(prompts::metadata_lead_in()) + render_metadata(*demo.metadata);
      }
      u += "\n\nWriting Prompt: " + demo.prompt.text;
      turns.push_back({std::move(u), demo.text});
    }
  }
  if (rules) user += "\n\nStory Rules\n" + render_rules(*rules);

  auto req = make_request(Role::StoryGen, std::move(system), std::move(user), std::move(turns));
  req.sampling = config.sampling;
  return req;
}

ChatRequest prepare_request(GenerationMethod method, const AuthorProfile& author, const GenerationTarget& target,
                            const ArtifactStore& store, const GenerationConfig& config,
                            const prompts::PromptCatalog& catalog) {
  PromptArtifacts artifacts;
  const auto& key = target.wp.text;
  auto pick_rules = [&](const std::map<std::string, StoryRules>& table, const char* what) {
    auto it = table.find(key);
    if (it == table.end()) throw missing(method, std::string(what) + " for this writing prompt");
    artifacts.rules = it->second;
  };
  switch (method) {
    case GenerationMethod::AverageAuthor:
    case GenerationMethod::RAG:
      break;
    case GenerationMethod::Delta: pick_rules(store.delta_rules, "Delta rules"); break;
    case GenerationMethod::Sheet:
      if (!store.sheet_persona) throw missing(method, "a sheet persona");
      artifacts.persona = store.sheet_persona;
      [[fallthrough]];
    case GenerationMethod::SheetNoPersona: pick_rules(store.sheet_rules, "sheet rules"); break;
    case GenerationMethod::Summ:
      if (!store.summary_persona) throw missing(method, "a summary persona");
      artifacts.persona = store.summary_persona;
      [[fallthrough]];
    case GenerationMethod::SummNoPersona: pick_rules(store.summary_rules, "summary rules"); break;
    case GenerationMethod::Oracle: pick_rules(store.oracle_rules, "Oracle rules"); break;
  }
  if (method_takes_demos(method, config)) {
    const auto k = method == GenerationMethod::RAG ? std::max<std::size_t>(config.k_shots, 1) : config.k_shots;
    artifacts.demos = select_demonstrations(author, target.wp, std::min(k, author.profiling.size()));
  }
  if (config.excluded_category && artifacts.rules) {
    auto ablated = ablate(*artifacts.rules, artifacts.persona, *config.excluded_category);
    artifacts.rules = std::move(ablated.rules);
    artifacts.persona = std::move(ablated.persona);
  }
  return assemble_prompt(method, author, target, artifacts, config, catalog);
}

GeneratedStory generate_story(GenerationMethod method, const AuthorProfile& author, const GenerationTarget& target,
                              const ArtifactStore& store, const GenerationConfig& config, Gateway& gateway,
                              const prompts::PromptCatalog& catalog) {
  try {
    auto request = prepare_request(method, author, target, store, config, catalog);
    auto completion = gateway.complete(request);
    auto body = text::trim(completion.text);
    if (body.empty()) throw Error(ErrorCode::ProviderError, "story generation returned empty text");
    GeneratedStory out;
    out.author_id = author.author_id;
    out.source = target.wp.source;
    out.wp = target.wp;
    out.method = method;
    out.word_count = text::word_count(body);
    out.text = std::move(body);
    out.inputs_digest = fingerprint(request);
    return out;
  } catch (Error& e) {
    e.with_author(author.author_id).with_wp(target.wp.text);
    throw;
  }
}

json generated_to_json(const GeneratedStory& s) {
  return {
      {"author_id", s.author_id},     {"source", source_tag(s.source)}, {"wp", s.wp.text},
      {"method", method_key(s.method)}, {"text", s.text},               {"inputs_digest", s.inputs_digest},
      {"word_count", s.word_count},
  };
}

GeneratedStory generated_from_json(const json& j) {
  try {
    GeneratedStory s;
    s.author_id = j.at("author_id").get<std::string>();
    s.source = source_from_tag(j.at("source").get<std::string>());
    s.wp = WritingPrompt{j.at("wp").get<std::string>(), s.source};
    s.method = method_from_key(j.at("method").get<std::string>());
    s.text = j.at("text").get<std::string>();
    s.inputs_digest = j.at("inputs_digest").get<std::string>();
    s.word_count = j.at("word_count").get<std::size_t>();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("bad generated story JSON: ") + e.what());
  }
}

}  // namespace storygen
