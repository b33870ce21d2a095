#include <gtest/gtest.h>

#include "storygen/error.hpp"
#include "storygen/fixtures.hpp"
#include "storygen/profiler.hpp"
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

ClaimEvidence ce(const std::string& claim, std::optional<int> ref = std::nullopt, bool grouped = false) {
  auto out = make_claim_evidence(claim, "In the story regarding \"p\", evidence for " + claim + " shows up.", ref);
  out.grouped = grouped;
  return out;
}

AuthorProfile profile(int n_profiling) {
  AuthorProfile p;
  p.author_id = "a";
  for (int i = 1; i <= n_profiling; ++i) {
    p.profiling.push_back(make_story("a", {"prompt " + std::to_string(i)}, "story text " + std::to_string(i), i));
  }
  p.generation.push_back(make_story("a", {"last prompt"}, "last", n_profiling + 1));
  return p;
}

const char* kValidSheetReply =
    "<writing_style>\n### Plot\n1. **Opens fast**\n- Evidence: In the story regarding \"p\", first line is a "
    "punch.\n</writing_style>";

}  // namespace

TEST(Profiler, AverageStoryUsesSourceTemplate) {
  std::vector<ChatRequest> seen;
  FunctionBackend backend("f", [&](const ChatRequest& r) {
    seen.push_back(r);
    return "an average story";
  });
  Gateway gw(backend);
  auto a = generate_average_story({"Dragons", SourceKind::Reddit}, gw);
  generate_average_story({"Dragons", SourceKind::AO3}, gw);
  EXPECT_EQ(a.text, "an average story");
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0].role, Role::Avg);
  EXPECT_NE(seen[0].system, seen[1].system);
  EXPECT_NE(seen[0].user.find("Writing Prompt: Dragons"), std::string::npos);
}

TEST(Profiler, AverageStoryEmptyReplyIsProviderError) {
  FunctionBackend backend("f", [](const ChatRequest&) { return "  "; });
  Gateway gw(backend);
  EXPECT_EQ(code_of([&] { generate_average_story({"x"}, gw); }), ErrorCode::ProviderError);
}

TEST(Profiler, IntermediateRetriesOnce) {
  auto mock = MockBackend::script({"no tags here", kValidSheetReply});
  Gateway gw(mock);
  auto story = make_story("a", {"p"}, "author text", 1);
  auto sheet = intermediate_sheet({"p"}, story, {{"p"}, "avg text", SourceKind::Reddit}, gw);
  EXPECT_EQ(gw.calls(Role::Sheet), 2u);
  EXPECT_EQ(sheet[Category::Plot].size(), 1u);

  auto bad = MockBackend::script({"no tags", "<writing_style>prose only</writing_style>"});
  Gateway gw2(bad);
  EXPECT_EQ(code_of([&] { intermediate_sheet({"p"}, story, {{"p"}, "avg", SourceKind::Reddit}, gw2); }),
            ErrorCode::SheetParseFailed);
  EXPECT_EQ(gw2.calls(), 2u);
}

TEST(Profiler, FinalizeDropsDegenerateStampsAndCaps) {
  WritingSheet m;
  for (int i = 0; i < 12; ++i) m[Category::Plot].push_back(ce("plain " + std::to_string(i), 1));
  m[Category::Plot].push_back(ce("grouped one", 2, true));
  m[Category::Creativity].push_back(make_claim_evidence("bare", "no framing at all"));
  m[Category::Development].push_back(ce("unstamped"));
  auto out = finalize_combined(m, 3);
  ASSERT_EQ(out[Category::Plot].size(), kMaxClaimsPerCategory);
  EXPECT_EQ(out[Category::Plot][0].claim, "grouped one");
  EXPECT_EQ(out[Category::Plot][1].claim, "plain 0");
  EXPECT_TRUE(out[Category::Creativity].empty());
  EXPECT_EQ(out[Category::Development][0].story_ref, 3);

  WritingSheet future;
  future[Category::Plot].push_back(ce("x", 4));
  EXPECT_EQ(code_of([&] { finalize_combined(future, 3); }), ErrorCode::RefOutOfRange);
  EXPECT_EQ(code_of([&] { finalize_combined(future, 0); }), ErrorCode::PreconditionViolated);
}

TEST(Profiler, CombineStampsCurrentStepAndChecksPrev) {
  std::string seen_user;
  FunctionBackend backend("f", [&](const ChatRequest& r) {
    seen_user = r.user;
    return "<combined_author_sheet>\n### Plot\n1. **new**\n- Evidence: In the story regarding \"q\", it happens."
           "\n</combined_author_sheet>";
  });
  Gateway gw(backend);
  WritingSheet prev;
  prev[Category::Plot].push_back(ce("old", 1));
  WritingSheet cur;
  cur[Category::Plot].push_back(ce("new"));
  auto out = combine(prev, cur, 2, gw);
  EXPECT_NE(seen_user.find("<previous_sheet>"), std::string::npos);
  EXPECT_NE(seen_user.find("shows up. [2]"), std::string::npos);  // current entries tagged before the call
  EXPECT_EQ(out[Category::Plot][0].story_ref, 2);

  WritingSheet bad_prev;
  bad_prev[Category::Plot].push_back(ce("old", 2));
  EXPECT_EQ(code_of([&] { combine(bad_prev, cur, 2, gw); }), ErrorCode::PreconditionViolated);
}

TEST(Profiler, BuildSheetCallCountAndRefs) {
  FunctionBackend backend("synthetic", fixtures::synthetic_responder());
  for (int p = 1; p <= 5; ++p) {
    Gateway gw(backend);
    auto build = build_sheet(profile(p), gw);
    EXPECT_EQ(gw.calls(), static_cast<std::size_t>(3 * p));
    EXPECT_EQ(gw.calls(Role::Avg), static_cast<std::size_t>(p));
    EXPECT_EQ(gw.calls(Role::Sheet), static_cast<std::size_t>(p));
    EXPECT_EQ(gw.calls(Role::Combine), static_cast<std::size_t>(p));
    ASSERT_EQ(build.transcript.size(), static_cast<std::size_t>(p));
    for (auto c : kCategories) {
      EXPECT_LE(build.sheet[c].size(), kMaxClaimsPerCategory);
      for (const auto& e : build.sheet[c]) {
        ASSERT_TRUE(e.story_ref.has_value());
        EXPECT_GE(*e.story_ref, 1);
        EXPECT_LE(*e.story_ref, p);
      }
    }
  }
}

TEST(Profiler, BuildSheetErrorCarriesStep) {
  int calls = 0;
  FunctionBackend backend("f", [&](const ChatRequest& r) -> std::string {
    ++calls;
    if (r.role == Role::Avg) return "avg";
    if (r.role == Role::Sheet && calls > 3) return "garbage";
    if (r.role == Role::Sheet) return kValidSheetReply;
    return "<combined_author_sheet>\n### Plot\n1. **c**\n- Evidence: In the story regarding \"p\", e."
           "\n</combined_author_sheet>";
  });
  Gateway gw(backend);
  try {
    build_sheet(profile(3), gw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SheetParseFailed);
    EXPECT_EQ(e.context().step, 2);
    EXPECT_EQ(e.context().author, "a");
    EXPECT_EQ(e.context().wp, "prompt 2");
  }
}

TEST(Profiler, SummaryIsOneCallWithoutCap) {
  std::string reply = "<writing_style>\n### Plot\n";
  for (int i = 1; i <= 15; ++i) {
    reply += std::to_string(i) + ". **claim " + std::to_string(i) + "**\n- Evidence: In the story regarding \"p\", e" +
             std::to_string(i) + ". [1]\n";
  }
  reply += "</writing_style>";
  std::string user;
  FunctionBackend backend("f", [&](const ChatRequest& r) {
    user = r.user;
    return reply;
  });
  Gateway gw(backend);
  auto s = build_summary(profile(3), gw);
  EXPECT_EQ(gw.calls(), 1u);
  EXPECT_EQ(gw.calls(Role::Summary), 1u);
  EXPECT_EQ(s.kind, SheetKind::Summary);
  EXPECT_EQ(s[Category::Plot].size(), 15u);
  EXPECT_NE(user.find("[3] Writing Prompt: prompt 3"), std::string::npos);
}

TEST(Profiler, JsonRoundTrip) {
  FunctionBackend backend("synthetic", fixtures::synthetic_responder());
  Gateway gw(backend);
  auto build = build_sheet(profile(3), gw);
  EXPECT_EQ(sheet_from_json(sheet_to_json(build.sheet, "a")), build.sheet);
  auto t = transcript_from_json(transcript_to_json(build.transcript));
  ASSERT_EQ(t.size(), build.transcript.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t[i].step, build.transcript[i].step);
    EXPECT_EQ(t[i].average.text, build.transcript[i].average.text);
    EXPECT_EQ(t[i].intermediate, build.transcript[i].intermediate);
    EXPECT_EQ(t[i].combined, build.transcript[i].combined);
  }
}
