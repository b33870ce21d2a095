#include <gtest/gtest.h>

#include "oracles.hpp"
#include "storygen/error.hpp"
#include "storygen/stylist.hpp"

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

StoryRules sample_rules() {
  auto block = extract_block(oracle::slurp(oracle::data_dir() / "rules_sample.md"), "story_rules");
  return parse_rules(block, RulesProvenance::FromSheet);
}

PersonaDescription sample_persona() {
  return parse_persona(extract_block(oracle::slurp(oracle::data_dir() / "persona_sample.md"), "persona_prompt"));
}

WritingSheet small_sheet() {
  WritingSheet s;
  s[Category::Plot].push_back(make_claim_evidence("Opens fast", "In the story regarding \"x\", the first line hits.", 1));
  return s;
}

const char* kRulesReply =
    "<story_rules>\n**Plot:**\n- p1\n**Creativity:**\n- c1\n**Development (Character and Setting):**\n- d1\n"
    "**Language Use:**\n- l1\n</story_rules>";

}  // namespace

TEST(Persona, ParsesSample) {
  auto p = sample_persona();
  EXPECT_EQ(p.paragraph_count(), 4u);
  EXPECT_EQ(p[Category::Plot].rfind("As a storyteller", 0), 0u);
  EXPECT_EQ(p[Category::LanguageUse].rfind("Your language use", 0), 0u);
}

TEST(Persona, WrongParagraphCountFails) {
  EXPECT_EQ(code_of([] { parse_persona("one\n\ntwo\n\nthree"); }), ErrorCode::PersonaParseFailed);
  EXPECT_EQ(code_of([] { parse_persona("1\n\n2\n\n3\n\n4\n\n5"); }), ErrorCode::PersonaParseFailed);
  auto p = parse_persona("a\nb\n\nc\n\n\n\nd\n\ne");
  EXPECT_EQ(p[Category::Plot], "a b");
  EXPECT_EQ(p.full_text(), "a b\n\nc\n\nd\n\ne");
}

TEST(Rules, ParsesSample) {
  auto r = sample_rules();
  for (auto c : kCategories) EXPECT_EQ(r[c].size(), 4u) << category_name(c);
  EXPECT_EQ(r[Category::Plot][0].rfind("Structure the story around", 0), 0u);
  EXPECT_EQ(r.provenance, RulesProvenance::FromSheet);
}

TEST(Rules, RenderRoundTrip) {
  auto r = sample_rules();
  EXPECT_EQ(parse_rules(render_rules(r), RulesProvenance::FromSheet), r);
}

TEST(Rules, HeadingAndBulletVariants) {
  auto r = parse_rules(
      "## Plot\n1. first\n2) second\n   wrapped tail\nCreativity: inline directive\n* star\n"
      "- **Development**\n+ plus\nLanguage Use\n\xE2\x80\xA2 dot",
      RulesProvenance::Contrast);
  EXPECT_EQ(r[Category::Plot], (std::vector<std::string>{"first", "second wrapped tail"}));
  EXPECT_EQ(r[Category::Creativity], (std::vector<std::string>{"inline directive", "star"}));
  EXPECT_EQ(r[Category::Development], (std::vector<std::string>{"plus"}));
  EXPECT_EQ(r[Category::LanguageUse], (std::vector<std::string>{"dot"}));
}

TEST(Rules, MissingHeadingOrEmptyFails) {
  EXPECT_EQ(code_of([] { parse_rules("**Plot:**\n- a\n**Creativity:**\n- b", RulesProvenance::FromSheet); }),
            ErrorCode::RulesParseFailed);
  EXPECT_EQ(code_of([] {
              parse_rules("**Plot:**\n**Creativity:**\n**Development:**\n**Language Use:**", RulesProvenance::FromSheet);
            }),
            ErrorCode::RulesParseFailed);
}

TEST(Rules, ProvenanceNames) {
  for (auto p : {RulesProvenance::FromSheet, RulesProvenance::FromSummary, RulesProvenance::Contrast,
                 RulesProvenance::FewShotTransfer}) {
    EXPECT_EQ(provenance_from_name(provenance_name(p)), p);
  }
}

TEST(Stylist, PersonaFromSheet) {
  std::string user;
  FunctionBackend backend("f", [&](const ChatRequest& r) {
    EXPECT_EQ(r.role, Role::Persona);
    user = r.user;
    return "<persona_prompt>\na\n\nb\n\nc\n\nd\n</persona_prompt>";
  });
  Gateway gw(backend);
  auto p = generate_persona(small_sheet(), gw);
  EXPECT_EQ(p.paragraph_count(), 4u);
  EXPECT_NE(user.find("Opens fast"), std::string::npos);
  EXPECT_EQ(code_of([&] { generate_persona(WritingSheet{}, gw); }), ErrorCode::PreconditionViolated);
}

TEST(Stylist, PersonaRetryThenFail) {
  auto mock = MockBackend::script({"<persona_prompt>one</persona_prompt>", "<persona_prompt>two</persona_prompt>"});
  Gateway gw(mock);
  EXPECT_EQ(code_of([&] { generate_persona(small_sheet(), gw); }), ErrorCode::PersonaParseFailed);
  EXPECT_EQ(gw.calls(), 2u);
}

TEST(Stylist, RulesProvenanceFollowsSheetKind) {
  FunctionBackend backend("f", [](const ChatRequest&) { return kRulesReply; });
  Gateway gw(backend);
  auto sheet = small_sheet();
  EXPECT_EQ(rules_from_sheet(sheet, {"wp"}, gw).provenance, RulesProvenance::FromSheet);
  sheet.kind = SheetKind::Summary;
  EXPECT_EQ(rules_from_sheet(sheet, {"wp"}, gw).provenance, RulesProvenance::FromSummary);
  auto story = make_story("a", {"wp"}, "author", 1);
  EXPECT_EQ(rules_by_contrast({"wp"}, story, {{"wp"}, "avg", SourceKind::Reddit}, gw).provenance,
            RulesProvenance::Contrast);
}

TEST(Stylist, FewShotTransferKeepsMostRecentPairs) {
  ChatRequest seen;
  FunctionBackend backend("f", [&](const ChatRequest& r) {
    seen = r;
    return kRulesReply;
  });
  Gateway gw(backend);
  std::vector<std::pair<WritingPrompt, StoryRules>> pairs;
  for (int i = 1; i <= 5; ++i) {
    StoryRules r;
    r[Category::Plot].push_back("rule " + std::to_string(i));
    r.provenance = RulesProvenance::Contrast;
    pairs.emplace_back(WritingPrompt{"wp " + std::to_string(i)}, r);
  }
  auto out = rules_fewshot_transfer(pairs, {"new"}, gw, 2);
  EXPECT_EQ(out.provenance, RulesProvenance::FewShotTransfer);
  ASSERT_EQ(seen.few_shot.size(), 2u);
  EXPECT_EQ(seen.few_shot[0].user, "Writing Prompt: wp 4");
  EXPECT_NE(seen.few_shot[1].assistant.find("rule 5"), std::string::npos);
  EXPECT_NE(seen.user.find("Writing Prompt: new"), std::string::npos);

  rules_fewshot_transfer(pairs, {"new"}, gw);
  EXPECT_EQ(seen.few_shot.size(), 5u);
}

TEST(Stylist, AblateEachCategory) {
  auto rules = sample_rules();
  auto persona = sample_persona();
  for (auto c : kCategories) {
    auto a = ablate(rules, persona, c);
    for (auto d : kCategories) {
      if (d == c) {
        EXPECT_TRUE(a.rules[d].empty());
        EXPECT_TRUE((*a.persona)[d].empty());
      } else {
        EXPECT_EQ(a.rules[d], rules[d]);
        EXPECT_EQ((*a.persona)[d], persona[d]);
      }
    }
    EXPECT_EQ(a.persona->paragraph_count(), 3u);
  }
  EXPECT_FALSE(ablate(rules, std::nullopt, Category::Plot).persona.has_value());
}

TEST(Stylist, JsonRoundTrip) {
  EXPECT_EQ(persona_from_json(persona_to_json(sample_persona())), sample_persona());
  EXPECT_EQ(rules_from_json(rules_to_json(sample_rules())), sample_rules());
}
