// Command-line front end: one subcommand per pipeline stage.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "storygen/error.hpp"
#include "storygen/fixtures.hpp"
#include "storygen/pipeline.hpp"

using namespace storygen;
using json = nlohmann::json;

namespace {

constexpr int kExitUser = 1;
constexpr int kExitUpstream = 2;

struct Options {
  std::string config;
  std::string output;
  std::size_t workers = 0;
  std::string log_level = "warn";
  std::int64_t max_p = 10;
  std::string dir;
  std::uint64_t seed = fixtures::kDefaultFixtureSeed;
};

void print_summary(const StageSummary& s) {
  std::cout << "stage=" << s.stage << " authors=" << s.authors << " items=" << s.items << " reused=" << s.reused
            << " calls=" << s.calls << "\n";
}

RunConfig load(const Options& o) {
  auto c = load_config(o.config);
  if (!o.output.empty()) c.output_dir = o.output;
  if (o.workers) c.workers = o.workers;
  return c;
}

void report_error(const Error& e) {
  json j = {{"error", std::string(error_code_name(e.code()))}, {"detail", e.detail()}};
  const auto& ctx = e.context();
  j["author"] = ctx.author ? json(*ctx.author) : json(nullptr);
  j["wp"] = ctx.wp ? json(*ctx.wp) : json(nullptr);
  j["step"] = ctx.step ? json(*ctx.step) : json(nullptr);
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Author-style story generation pipeline"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  auto add_stage = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", o.config, "run config (JSON)")->required();
    sub->add_option("-o,--output", o.output, "override the output directory");
    sub->add_option("-w,--workers", o.workers, "authors processed in parallel (model stages)");
    return sub;
  };
  auto* ingest = add_stage("ingest", "load and split the dataset, write validation report");
  auto* profile = add_stage("profile", "build writing sheets and summaries");
  auto* stylize = add_stage("stylize", "derive personas and story rules");
  auto* generate = add_stage("generate", "generate stories for every method");
  auto* judge = add_stage("judge", "pairwise judging against the average-author baseline");
  auto* metrics = add_stage("metrics", "traditional metrics table");
  auto* report = add_stage("report", "aggregate verdicts into win rates");
  auto* pipeline = add_stage("pipeline", "run every stage in one process");

  auto* cost = app.add_subcommand("cost", "projected profiling cost per author");
  cost->add_option("--max-p", o.max_p, "largest profiling-set size")->capture_default_str()->check(CLI::PositiveNumber);

  auto* emit = app.add_subcommand("emit-fixture", "write the offline fixture (dataset, mock script, goldens)");
  emit->add_option("-d,--dir", o.dir, "target directory")->required();
  emit->add_option("--seed", o.seed, "fixture seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUser;
  }
  spdlog::set_default_logger(spdlog::stderr_logger_mt("storygen"));
  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    if (*cost) {
      std::cout << cost_table_csv(o.max_p);
      return 0;
    }
    if (*emit) {
      auto s = fixtures::emit_fixture(o.dir, o.seed);
      std::cout << "exchanges=" << s.exchanges << " golden_files=" << s.golden_files << "\n";
      return 0;
    }
    const auto config = load(o);
    if (*ingest) print_summary(run_ingest(config));
    if (*metrics) print_summary(run_metrics(config));
    if (*report) print_summary(run_report(config));
    if (*profile || *stylize || *generate || *judge || *pipeline) {
      auto gateways = Gateways::from_config(config);
      if (*profile) print_summary(run_profile(config, *gateways));
      if (*stylize) print_summary(run_stylize(config, *gateways));
      if (*generate) print_summary(run_generate(config, *gateways));
      if (*judge) print_summary(run_judge(config, *gateways));
      if (*pipeline) {
        for (const auto& s : run_pipeline(config, *gateways)) print_summary(s);
      }
    }
  } catch (const Error& e) {
    report_error(e);
    return is_upstream_failure(e.code()) ? kExitUpstream : kExitUser;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"detail", e.what()}}.dump() << "\n";
    return kExitUser;
  }
  return 0;
}
