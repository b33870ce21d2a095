#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "storygen/error.hpp"
#include "storygen/tagparse.hpp"

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

}  // namespace

TEST(Tags, ExtractLastBlock) {
  EXPECT_EQ(extract_block("<t>old</t> text <t>\n new \n</t>", "t"), "new");
  EXPECT_EQ(code_of([] { extract_block("nothing", "t"); }), ErrorCode::MissingTag);
  EXPECT_EQ(code_of([] { extract_block("<t> open", "t"); }), ErrorCode::UnclosedTag);
}

TEST(Tags, CategoryHeadingVariants) {
  EXPECT_EQ(match_category_heading("### Plot"), Category::Plot);
  EXPECT_EQ(match_category_heading("**Creativity:**"), Category::Creativity);
  EXPECT_EQ(match_category_heading("Development (Character and Setting)"), Category::Development);
  EXPECT_EQ(match_category_heading("language use"), Category::LanguageUse);
  EXPECT_FALSE(match_category_heading("Themes").has_value());
}

TEST(Tags, CategoryKeysRoundTrip) {
  for (auto c : kCategories) EXPECT_EQ(category_from_key(category_key(c)), c);
  EXPECT_FALSE(category_from_key("pacing").has_value());
}

TEST(Tags, FramingExtraction) {
  EXPECT_EQ(extract_framing("In the story regarding \"a king's deal with the fae,\" the author..."),
            "a king's deal with the fae");
  EXPECT_EQ(extract_framing("In the story regarding \xE2\x80\x9C" "curly quotes\xE2\x80\x9D, x"), "curly quotes");
  EXPECT_EQ(extract_framing("in the story regarding 'single', x"), "single");
  EXPECT_EQ(extract_framing("In the story regarding a lost dog, the narrator..."), "a lost dog");
  EXPECT_FALSE(extract_framing("The narrator says hello.").has_value());
}

TEST(Sheet, ParsesSampleBlock) {
  auto block = extract_block(oracle::slurp(oracle::data_dir() / "sheet_sample.md"), "writing_style");
  auto parsed = parse_sheet(block, SheetKind::Iterative);
  EXPECT_TRUE(parsed.warnings.empty());
  const auto& s = parsed.sheet;
  EXPECT_EQ(s.total(), 8u);
  std::set<int> refs;
  for (auto c : kCategories) {
    EXPECT_EQ(s[c].size(), 2u);
    for (const auto& ce : s[c]) {
      ASSERT_TRUE(ce.story_ref.has_value());
      refs.insert(*ce.story_ref);
      EXPECT_TRUE(ce.framing.has_value());
      EXPECT_FALSE(detect_degenerate_evidence(ce));
    }
  }
  EXPECT_EQ(refs, (std::set<int>{7, 8, 10}));
  EXPECT_EQ(s[Category::Plot][1].framing, "a king's deal with the fae for his firstborn");
  EXPECT_EQ(s[Category::Plot][0].claim.substr(0, 34), "The author structures the story ar");
}

TEST(Sheet, RoundTripIsExact) {
  auto block = extract_block(oracle::slurp(oracle::data_dir() / "sheet_sample.md"), "writing_style");
  auto s = parse_sheet(block, SheetKind::Iterative).sheet;
  auto again = parse_sheet(render_sheet(s), SheetKind::Iterative).sheet;
  EXPECT_EQ(again, s);
  EXPECT_EQ(render_sheet(again), render_sheet(s));
}

TEST(Sheet, GroupedMarkerAndContinuationLines) {
  auto s = parse_sheet(
               "### Plot\n"
               "1. **Claim one** (grouped)\n"
               "   - Evidence: In the story regarding \"x\", first part\n"
               "     continues here. [2]\n"
               "2. Plain claim (grouped)\n"
               "   * Evidence: In the story regarding \"y\", more.\n",
               SheetKind::Iterative)
               .sheet;
  ASSERT_EQ(s[Category::Plot].size(), 2u);
  EXPECT_TRUE(s[Category::Plot][0].grouped);
  EXPECT_EQ(s[Category::Plot][0].story_ref, 2);
  EXPECT_NE(s[Category::Plot][0].evidence.find("continues here."), std::string::npos);
  EXPECT_TRUE(s[Category::Plot][1].grouped);
  EXPECT_EQ(s[Category::Plot][1].claim, "Plain claim");
  EXPECT_FALSE(s[Category::Plot][1].story_ref.has_value());
}

TEST(Sheet, Errors) {
  EXPECT_EQ(code_of([] { parse_sheet("just prose", SheetKind::Iterative); }), ErrorCode::NoCategoriesFound);
  EXPECT_EQ(code_of([] { parse_sheet("### Plot\n1. **c**\n2. **d**\n- Evidence: e", SheetKind::Iterative); }),
            ErrorCode::ClaimWithoutEvidence);
}

TEST(Sheet, UnknownHeadingWarnsAndSkips) {
  auto p = parse_sheet("### Plot\n1. **a**\n- Evidence: e1\n### Themes\n1. **b**\n- Evidence: e2",
                       SheetKind::Iterative);
  EXPECT_EQ(p.sheet.total(), 1u);
  EXPECT_FALSE(p.warnings.empty());
}

TEST(Sheet, RefZeroIsDroppedWithWarning) {
  auto p = parse_sheet("### Plot\n1. **a**\n- Evidence: e [0]", SheetKind::Iterative);
  EXPECT_FALSE(p.sheet[Category::Plot][0].story_ref.has_value());
  EXPECT_FALSE(p.warnings.empty());
}

TEST(Sheet, DegenerateEvidence) {
  EXPECT_TRUE(detect_degenerate_evidence(make_claim_evidence("Uses humor", "uses humor.")));
  EXPECT_TRUE(detect_degenerate_evidence(make_claim_evidence("Uses humor", "the story is funny")));
  EXPECT_FALSE(detect_degenerate_evidence(
      make_claim_evidence("Uses humor", "In the story regarding \"cats\", the cat trips.")));
}

TEST(Sheet, RandomRoundTrip) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    WritingSheet s;
    for (auto c : kCategories) {
      const auto n = rng() % 5;
      for (std::size_t i = 0; i < n; ++i) {
        auto ce = make_claim_evidence("Claim " + std::to_string(rng() % 1000),
                                      "In the story regarding \"wp " + std::to_string(rng() % 50) + "\", detail " +
                                          std::to_string(rng() % 1000) + ".");
        if (rng() % 2) ce.story_ref = static_cast<int>(1 + rng() % 20);
        ce.grouped = rng() % 3 == 0;
        s[c].push_back(ce);
      }
    }
    EXPECT_EQ(parse_sheet(render_sheet(s), SheetKind::Iterative).sheet, s);
  }
}

TEST(Scores, ParseVariants) {
  auto s = parse_scores("Story A: 4\n**Story B**: 2", {"Story A", "Story B"});
  EXPECT_EQ(s["Story A"], 4);
  EXPECT_EQ(s["Story B"], 2);
  auto t = parse_scores("- assistant a: [5]\nAssistant B: {3}", {"Assistant A", "Assistant B"});
  EXPECT_EQ(t["Assistant A"], 5);
  EXPECT_EQ(t["Assistant B"], 3);
  // The last occurrence wins.
  EXPECT_EQ(parse_scores("Story A: 1\nStory A: 5", {"Story A"})["Story A"], 5);
}

TEST(Scores, Errors) {
  EXPECT_EQ(code_of([] { parse_scores("Story A: 4", {"Story A", "Story B"}); }), ErrorCode::LabelMissing);
  EXPECT_EQ(code_of([] { parse_scores("Story A: 6\nStory B: 1", {"Story A", "Story B"}); }),
            ErrorCode::ScoreOutOfRange);
  EXPECT_EQ(code_of([] { parse_scores("Story A: 0\nStory B: 1", {"Story A", "Story B"}); }),
            ErrorCode::ScoreOutOfRange);
}

TEST(Scores, RenderParseRoundTrip) {
  std::vector<std::string> labels = {"Story A", "Story B"};
  for (int a = 1; a <= 5; ++a) {
    for (int b = 1; b <= 5; ++b) {
      std::map<std::string, int> m = {{"Story A", a}, {"Story B", b}};
      EXPECT_EQ(parse_scores(render_scores(m, labels), labels), m);
    }
  }
}
