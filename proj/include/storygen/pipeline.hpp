#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "storygen/corpus.hpp"
#include "storygen/gateway.hpp"
#include "storygen/generator.hpp"
#include "storygen/judge.hpp"
#include "storygen/metrics.hpp"

namespace storygen {

struct BackendConfig {
  /// "mock" (script/map file), "synthetic" (built-in offline responder) or "http".
  std::string kind = "mock";
  std::filesystem::path mock_path;
  std::string url;  // http only; GATEWAY_URL overrides
};

struct ModelConfig {
  std::string profiling = "gpt-4o";
  std::string story = "gpt-4o";
  std::string judge = "o4-mini";
};

struct RunConfig {
  std::filesystem::path dataset_path;
  std::filesystem::path output_dir = "out";
  BackendConfig backend;
  ModelConfig models;
  double split_ratio = kDefaultSplitRatio;
  std::size_t k_shots = 1;
  std::vector<GenerationMethod> methods{kAllMethods.begin(), kAllMethods.end()};
  std::vector<JudgeMode> judge_modes{kAllJudgeModes.begin(), kAllJudgeModes.end()};
  std::optional<Category> excluded_category;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool delta_demos = false;
  std::optional<std::size_t> delta_max_pairs;
  std::optional<std::size_t> story_length_words;
  std::string embedding_url;  // empty: offline hashing provider
  std::size_t embedding_dim = 256;
};

/// Relative paths inside the JSON are resolved against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

/// Gateways for the three model roles. With a mock backend all three share
/// one backend so script order follows the pipeline's call order.
class Gateways {
 public:
  static std::unique_ptr<Gateways> from_config(const RunConfig& config);
  /// All roles served by one caller-owned backend.
  static std::unique_ptr<Gateways> shared(Backend& backend);

  Gateway& analysis() { return *analysis_; }
  Gateway& story() { return *story_; }
  Gateway& judge() { return *judge_; }
  /// Script mocks are consumed in order, so runs must stay sequential.
  bool requires_sequential() const { return sequential_; }
  std::size_t total_calls() const;

 private:
  std::vector<std::unique_ptr<Backend>> owned_;
  std::unique_ptr<Gateway> analysis_;
  std::unique_ptr<Gateway> story_;
  std::unique_ptr<Gateway> judge_;
  bool sequential_ = false;
};

/// Directory name for an author id (anything outside [A-Za-z0-9_.-] becomes '_').
std::string author_dir_name(const std::string& author_id);

struct StageSummary {
  std::string stage;
  std::size_t authors = 0;
  std::size_t items = 0;
  std::size_t reused = 0;
  std::size_t calls = 0;
};

StageSummary run_ingest(const RunConfig& config);
StageSummary run_profile(const RunConfig& config, Gateways& gateways);
StageSummary run_stylize(const RunConfig& config, Gateways& gateways);
StageSummary run_generate(const RunConfig& config, Gateways& gateways);
StageSummary run_judge(const RunConfig& config, Gateways& gateways);
StageSummary run_metrics(const RunConfig& config);
StageSummary run_report(const RunConfig& config);

/// Every stage in order within one process.
std::vector<StageSummary> run_pipeline(const RunConfig& config, Gateways& gateways);

/// "p,sheet_usd,summary_usd" rows for p = 1..max_p.
std::string cost_table_csv(std::int64_t max_p, const PriceTable& prices = {});

/// Loads the artifacts stylize wrote for one author (plus profile sheets).
ArtifactStore load_artifact_store(const RunConfig& config, const std::string& author_id);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace storygen
