#include <gtest/gtest.h>

#include "oracles.hpp"
#include "storygen/error.hpp"
#include "storygen/generator.hpp"
#include "storygen/prompts.hpp"

using namespace storygen;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

std::string words(int n, const std::string& w = "w") {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + w;
  return out;
}

AuthorProfile author(SourceKind source = SourceKind::Reddit) {
  AuthorProfile p;
  p.author_id = "a";
  p.source = source;
  const std::vector<std::string> prompts = {"dragons guard the mountain", "a robot learns to paint",
                                            "the sea swallows a city"};
  for (int i = 0; i < 3; ++i) {
    std::optional<Metadata> md;
    if (source == SourceKind::AO3) md = Metadata{{"fandom", "F"}, {"rating", "G"}};
    p.profiling.push_back(make_story("a", {prompts[i], source}, words(100 * (i + 1), "s" + std::to_string(i)), i + 1,
                                     md));
  }
  std::optional<Metadata> md;
  if (source == SourceKind::AO3) md = Metadata{{"fandom", "F"}, {"rating", "T"}};
  p.generation.push_back(make_story("a", {"a robot paints the sea", source}, words(250), 4, md));
  return p;
}

StoryRules rules(RulesProvenance prov) {
  StoryRules r;
  r.provenance = prov;
  for (auto c : kCategories) r[c].push_back(std::string("do ") + std::string(category_key(c)));
  return r;
}

PersonaDescription persona() {
  PersonaDescription p;
  p.paragraphs = {"plot para", "creative para", "dev para", "lang para"};
  return p;
}

ArtifactStore full_store(const std::string& wp) {
  ArtifactStore s;
  s.sheet_persona = persona();
  s.summary_persona = persona();
  s.sheet_rules[wp] = rules(RulesProvenance::FromSheet);
  s.summary_rules[wp] = rules(RulesProvenance::FromSummary);
  s.delta_rules[wp] = rules(RulesProvenance::FewShotTransfer);
  s.oracle_rules[wp] = rules(RulesProvenance::Contrast);
  return s;
}

}  // namespace

TEST(Methods, KeysAndNames) {
  for (auto m : kAllMethods) {
    EXPECT_EQ(method_from_key(method_key(m)), m);
    EXPECT_EQ(method_from_key(method_display_name(m)), m);
  }
  EXPECT_EQ(method_from_key("SHEET-NP"), GenerationMethod::SheetNoPersona);
  EXPECT_EQ(code_of([] { method_from_key("nope"); }), ErrorCode::InvalidArgument);
  EXPECT_TRUE(method_uses_persona(GenerationMethod::Sheet));
  EXPECT_TRUE(method_uses_persona(GenerationMethod::Summ));
  EXPECT_FALSE(method_uses_persona(GenerationMethod::SheetNoPersona));
  EXPECT_FALSE(method_uses_persona(GenerationMethod::Oracle));
  EXPECT_EQ(method_rules_provenance(GenerationMethod::Delta), RulesProvenance::FewShotTransfer);
  EXPECT_EQ(method_rules_provenance(GenerationMethod::Oracle), RulesProvenance::Contrast);
  EXPECT_FALSE(method_rules_provenance(GenerationMethod::RAG).has_value());
}

TEST(Generator, DemonstrationsAreBm25Ranked) {
  auto a = author();
  auto demos = select_demonstrations(a, {"robot paint"}, 2);
  ASSERT_EQ(demos.size(), 2u);
  EXPECT_EQ(demos[0].prompt.text, "a robot learns to paint");
  EXPECT_TRUE(select_demonstrations(a, {"robot"}, 0).empty());
  EXPECT_EQ(code_of([&] { select_demonstrations(a, {"robot"}, 4); }), ErrorCode::InvalidArgument);
}

TEST(Generator, StoryLengthPriority) {
  auto a = author();
  GenerationConfig cfg;
  GenerationTarget t{{"x"}, std::nullopt, 250};
  EXPECT_EQ(resolve_story_length(a, t, cfg), 250u);
  cfg.story_length_words = 77;
  EXPECT_EQ(resolve_story_length(a, t, cfg), 77u);
  GenerationTarget bare{{"x"}, std::nullopt, std::nullopt};
  EXPECT_EQ(resolve_story_length(a, bare, GenerationConfig{}), 200u);  // mean of 100, 200, 300
}

TEST(Generator, AverageAuthorNeedsNothing) {
  auto a = author();
  auto t = target_from_story(a.generation[0]);
  auto req = assemble_prompt(GenerationMethod::AverageAuthor, a, t, {}, GenerationConfig{});
  EXPECT_EQ(req.role, Role::StoryGen);
  EXPECT_TRUE(req.few_shot.empty());
  EXPECT_NE(req.user.find("250 words"), std::string::npos);
  EXPECT_NE(req.user.find("Writing Prompt: a robot paints the sea"), std::string::npos);
  EXPECT_EQ(req.user.find("Story Rules"), std::string::npos);
}

TEST(Generator, MissingOrMismatchedArtifacts) {
  auto a = author();
  auto t = target_from_story(a.generation[0]);
  GenerationConfig cfg;
  PromptArtifacts none;
  EXPECT_EQ(code_of([&] { assemble_prompt(GenerationMethod::SheetNoPersona, a, t, none, cfg); }),
            ErrorCode::MissingArtifact);
  PromptArtifacts wrong;
  wrong.rules = rules(RulesProvenance::FromSummary);
  EXPECT_EQ(code_of([&] { assemble_prompt(GenerationMethod::SheetNoPersona, a, t, wrong, cfg); }),
            ErrorCode::MissingArtifact);
  PromptArtifacts no_persona;
  no_persona.rules = rules(RulesProvenance::FromSheet);
  EXPECT_EQ(code_of([&] { assemble_prompt(GenerationMethod::Sheet, a, t, no_persona, cfg); }),
            ErrorCode::MissingArtifact);
  EXPECT_EQ(code_of([&] { assemble_prompt(GenerationMethod::RAG, a, t, none, cfg); }), ErrorCode::MissingArtifact);
  EXPECT_EQ(code_of([&] { prepare_request(GenerationMethod::Oracle, a, t, ArtifactStore{}, cfg); }),
            ErrorCode::MissingArtifact);
}

TEST(Generator, Ao3NeedsMetadata) {
  auto a = author(SourceKind::AO3);
  auto t = target_from_story(a.generation[0]);
  auto req = assemble_prompt(GenerationMethod::AverageAuthor, a, t, {}, GenerationConfig{});
  EXPECT_NE(req.user.find(std::string(prompts::metadata_lead_in())), std::string::npos);
  EXPECT_NE(req.user.find("fandom: F"), std::string::npos);
  t.metadata.reset();
  EXPECT_EQ(code_of([&] { assemble_prompt(GenerationMethod::AverageAuthor, a, t, {}, GenerationConfig{}); }),
            ErrorCode::MetadataRequired);
}

TEST(Generator, RagUsesDemoTurns) {
  auto a = author();
  auto t = target_from_story(a.generation[0]);
  GenerationConfig cfg;
  cfg.k_shots = 2;
  auto req = prepare_request(GenerationMethod::RAG, a, t, ArtifactStore{}, cfg);
  ASSERT_EQ(req.few_shot.size(), 2u);
  std::vector<std::pair<int, std::string>> docs;
  for (std::size_t i = 0; i < a.profiling.size(); ++i) docs.emplace_back(static_cast<int>(i), a.profiling[i].prompt.text);
  const auto ranked = oracle::bm25(docs, t.wp.text);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& demo = a.profiling[static_cast<std::size_t>(ranked[i].id)];
    EXPECT_NE(req.few_shot[i].user.find("Writing Prompt: " + demo.prompt.text), std::string::npos);
    EXPECT_EQ(req.few_shot[i].assistant, demo.text);
  }
  EXPECT_NE(req.system.find(std::string(prompts::story_demos_adherence())), std::string::npos);
  EXPECT_EQ(req.system.find(std::string(prompts::story_rules_adherence())), std::string::npos);
}

TEST(Generator, DeltaDemosOnlyWithFlag) {
  auto a = author();
  auto t = target_from_story(a.generation[0]);
  auto store = full_store(t.wp.text);
  GenerationConfig cfg;
  EXPECT_TRUE(prepare_request(GenerationMethod::Delta, a, t, store, cfg).few_shot.empty());
  cfg.delta_demos = true;
  EXPECT_EQ(prepare_request(GenerationMethod::Delta, a, t, store, cfg).few_shot.size(), 1u);
}

TEST(Generator, NoPersonaVariantDiffersOnlyInPersonaSegment) {
  auto a = author();
  auto t = target_from_story(a.generation[0]);
  auto store = full_store(t.wp.text);
  GenerationConfig cfg;
  for (auto [with, without] : {std::pair{GenerationMethod::Sheet, GenerationMethod::SheetNoPersona},
                               std::pair{GenerationMethod::Summ, GenerationMethod::SummNoPersona}}) {
    auto p = prepare_request(with, a, t, store, cfg);
    auto np = prepare_request(without, a, t, store, cfg);
    EXPECT_EQ(p.user, np.user);
    EXPECT_EQ(p.few_shot, np.few_shot);
    EXPECT_EQ(p.sampling, np.sampling);
    EXPECT_EQ(p.system, np.system + "\n\n" + std::string(prompts::persona_lead_in()) + persona().full_text());
  }
}

TEST(Generator, AblationRemovesOneCategory) {
  auto a = author();
  auto t = target_from_story(a.generation[0]);
  auto store = full_store(t.wp.text);
  GenerationConfig cfg;
  cfg.excluded_category = Category::Creativity;
  auto req = prepare_request(GenerationMethod::Sheet, a, t, store, cfg);
  EXPECT_EQ(req.user.find("do creativity"), std::string::npos);
  EXPECT_NE(req.user.find("do plot"), std::string::npos);
  EXPECT_EQ(req.system.find("creative para"), std::string::npos);
  EXPECT_NE(req.system.find("plot para"), std::string::npos);
}

TEST(Generator, GenerateStoryRecord) {
  auto a = author();
  auto t = target_from_story(a.generation[0]);
  auto store = full_store(t.wp.text);
  FunctionBackend backend("f", [](const ChatRequest&) { return "  once upon a time  \n"; });
  Gateway gw(backend);
  auto s = generate_story(GenerationMethod::Oracle, a, t, store, GenerationConfig{}, gw);
  EXPECT_EQ(s.text, "once upon a time");
  EXPECT_EQ(s.word_count, 4u);
  EXPECT_EQ(s.inputs_digest, fingerprint(prepare_request(GenerationMethod::Oracle, a, t, store, GenerationConfig{})));
  EXPECT_EQ(generated_from_json(generated_to_json(s)), s);

  FunctionBackend empty("e", [](const ChatRequest&) { return " "; });
  Gateway gw2(empty);
  try {
    generate_story(GenerationMethod::Oracle, a, t, store, GenerationConfig{}, gw2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProviderError);
    EXPECT_EQ(e.context().author, "a");
  }
}
