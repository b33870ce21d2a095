#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"
#include "storygen/error.hpp"
#include "storygen/fixtures.hpp"
#include "storygen/pipeline.hpp"

using namespace storygen;
namespace fs = std::filesystem;

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

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = oracle::slurp(e.path());
  }
  return out;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("storygen_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig fixture_config(const fs::path& out) {
  auto c = load_config(oracle::fixture_dir() / "config.json");
  c.output_dir = out;
  return c;
}

}  // namespace

TEST(Config, ParsesAndResolvesPaths) {
  auto c = config_from_json(nlohmann::json::parse(R"({"dataset": "d.jsonl", "methods": ["sheet", "rag", "sheet"],
      "excluded_category": "plot", "k_shots": 2, "backend": {"kind": "synthetic"}})"),
                            "/base");
  EXPECT_EQ(c.dataset_path, fs::path("/base/d.jsonl"));
  EXPECT_EQ(c.output_dir, fs::path("/base/out"));
  EXPECT_EQ(c.methods, (std::vector<GenerationMethod>{GenerationMethod::RAG, GenerationMethod::Sheet}));
  EXPECT_EQ(c.excluded_category, Category::Plot);
  EXPECT_EQ(c.k_shots, 2u);
  auto again = config_from_json(config_to_json(c), "/elsewhere");
  EXPECT_EQ(again.dataset_path, c.dataset_path);
  EXPECT_EQ(again.methods, c.methods);
}

TEST(Config, RejectsBadInput) {
  using nlohmann::json;
  EXPECT_EQ(code_of([] { config_from_json(json::parse(R"({"dataset": "d", "bogus": 1})")); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { config_from_json(json::parse(R"({"dataset": "d", "k_shots": "two"})")); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { config_from_json(json::parse(R"({"dataset": "d", "methods": []})")); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { config_from_json(json::parse(R"({"dataset": "d", "excluded_category": "mood"})")); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { config_from_json(json::parse("[1]")); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { load_config("/nonexistent/config.json"); }), ErrorCode::IoError);
}

TEST(Files, AuthorDirNames) {
  EXPECT_EQ(author_dir_name("plain_name-1.x"), "plain_name-1.x");
  EXPECT_EQ(author_dir_name("a/b c"), "a_b_c");
}

TEST(Cost, TableCsv) {
  auto csv = cost_table_csv(2);
  EXPECT_EQ(csv, "p,sheet_usd,summary_usd\n1,0.06,0.02\n2,0.12,0.04\n");
  EXPECT_EQ(code_of([] { cost_table_csv(0); }), ErrorCode::InvalidArgument);
}

TEST(Pipeline, FixtureReplayMatchesGolden) {
  auto out = scratch("replay");
  auto config = fixture_config(out);
  auto gws = Gateways::from_config(config);
  EXPECT_TRUE(gws->requires_sequential());
  auto summaries = run_pipeline(config, *gws);
  ASSERT_EQ(summaries.size(), 7u);
  EXPECT_EQ(summaries[0].stage, "ingest");
  EXPECT_EQ(gws->total_calls(), 168u);
  EXPECT_EQ(tree(out), tree(oracle::fixture_dir() / "golden"));
  fs::remove_all(out);
}

TEST(Pipeline, StagewiseMapReplayAndReuse) {
  auto out = scratch("stages");
  auto config = fixture_config(out);
  config.backend.mock_path = oracle::fixture_dir() / "mock_map.json";
  config.workers = 3;
  auto gws = Gateways::from_config(config);
  EXPECT_FALSE(gws->requires_sequential());
  run_ingest(config);
  EXPECT_EQ(run_profile(config, *gws).calls, 20u);
  EXPECT_EQ(run_stylize(config, *gws).calls, 20u);
  EXPECT_EQ(run_generate(config, *gws).calls, 16u);
  EXPECT_EQ(run_judge(config, *gws).calls, 112u);
  run_metrics(config);
  run_report(config);
  EXPECT_EQ(tree(out), tree(oracle::fixture_dir() / "golden"));

  // A second pass reuses every generated story and verdict.
  auto g = run_generate(config, *gws);
  EXPECT_EQ(g.calls, 0u);
  EXPECT_EQ(g.reused, g.items);
  auto j = run_judge(config, *gws);
  EXPECT_EQ(j.calls, 0u);
  EXPECT_EQ(j.reused, j.items);
  EXPECT_EQ(tree(out), tree(oracle::fixture_dir() / "golden"));
  fs::remove_all(out);
}

TEST(Pipeline, StagesNeedTheirInputs) {
  auto out = scratch("missing");
  auto config = fixture_config(out);
  config.backend.mock_path = oracle::fixture_dir() / "mock_map.json";
  auto gws = Gateways::from_config(config);
  run_ingest(config);
  EXPECT_EQ(code_of([&] { run_stylize(config, *gws); }), ErrorCode::MissingArtifact);
  EXPECT_EQ(code_of([&] { run_generate(config, *gws); }), ErrorCode::MissingArtifact);
  EXPECT_EQ(code_of([&] { run_judge(config, *gws); }), ErrorCode::MissingArtifact);
  EXPECT_EQ(code_of([&] { run_metrics(config); }), ErrorCode::MissingArtifact);
  EXPECT_EQ(code_of([&] { run_report(config); }), ErrorCode::MissingArtifact);
  fs::remove_all(out);
}

TEST(Pipeline, SyntheticBackendAndUnknownMockFail) {
  auto out = scratch("synthetic");
  auto config = fixture_config(out);
  config.backend.kind = "synthetic";
  config.methods = {GenerationMethod::AverageAuthor, GenerationMethod::Sheet};
  config.workers = 2;
  auto gws = Gateways::from_config(config);
  run_pipeline(config, *gws);
  EXPECT_TRUE(fs::exists(out / "report" / "winrates.csv"));

  config.backend.kind = "warp";
  EXPECT_EQ(code_of([&] { Gateways::from_config(config); }), ErrorCode::InvalidArgument);
  fs::remove_all(out);
}

TEST(Fixtures, DatasetAndEmitAreDeterministic) {
  EXPECT_EQ(fixtures::synthetic_dataset(), fixtures::synthetic_dataset());
  EXPECT_NE(fixtures::synthetic_dataset(1), fixtures::synthetic_dataset(2));
  auto a = scratch("emit_a");
  auto b = scratch("emit_b");
  auto sa = fixtures::emit_fixture(a);
  auto sb = fixtures::emit_fixture(b);
  EXPECT_EQ(sa.exchanges, 168u);
  EXPECT_EQ(sa.golden_files, 17u);
  EXPECT_EQ(sb.exchanges, sa.exchanges);
  EXPECT_EQ(tree(a), tree(b));
  // The checked-in fixture is what the emitter produces.
  EXPECT_EQ(tree(a), tree(oracle::fixture_dir()));
  fs::remove_all(a);
  fs::remove_all(b);
}
