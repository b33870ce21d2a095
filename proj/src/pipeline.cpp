#include "storygen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "storygen/error.hpp"
#include "storygen/fixtures.hpp"
#include "storygen/http_backend.hpp"
#include "storygen/profiler.hpp"
#include "storygen/stylist.hpp"
#include "storygen/text.hpp"

namespace storygen {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("config field \"") + key + "\" has the wrong type");
  }
}

}  // namespace

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  static const std::set<std::string> known = {"dataset",       "output_dir",      "backend",      "models",
                                              "split_ratio",   "k_shots",         "methods",      "judge_modes",
                                              "excluded_category", "seed",        "workers",      "delta_demos",
                                              "delta_max_pairs", "story_length_words", "embedding"};
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::InvalidArgument, "unknown config field \"" + key + "\"");
  }
  RunConfig c;
  c.dataset_path = resolve(base_dir, get_or<std::string>(j, "dataset", ""));
  c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "out"));
  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    c.backend.kind = get_or<std::string>(b, "kind", "mock");
    c.backend.mock_path = resolve(base_dir, get_or<std::string>(b, "mock_path", ""));
    c.backend.url = get_or<std::string>(b, "url", "");
  }
  if (j.contains("models")) {
    const auto& m = j.at("models");
    c.models.profiling = get_or<std::string>(m, "profiling", c.models.profiling);
    c.models.story = get_or<std::string>(m, "story", c.models.story);
    c.models.judge = get_or<std::string>(m, "judge", c.models.judge);
  }
  c.split_ratio = get_or<double>(j, "split_ratio", c.split_ratio);
  c.k_shots = get_or<std::size_t>(j, "k_shots", c.k_shots);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(method_from_key(m.get<std::string>()));
  }
  if (j.contains("judge_modes")) {
    c.judge_modes.clear();
    for (const auto& m : j.at("judge_modes")) c.judge_modes.push_back(judge_mode_from_key(m.get<std::string>()));
  }
  if (j.contains("excluded_category") && !j.at("excluded_category").is_null()) {
    const auto key = j.at("excluded_category").get<std::string>();
    c.excluded_category = category_from_key(key);
    if (!c.excluded_category) throw Error(ErrorCode::InvalidArgument, "unknown category \"" + key + "\"");
  }
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.workers = std::max<std::size_t>(1, get_or<std::size_t>(j, "workers", c.workers));
  c.delta_demos = get_or<bool>(j, "delta_demos", c.delta_demos);
  if (j.contains("delta_max_pairs") && !j.at("delta_max_pairs").is_null()) {
    c.delta_max_pairs = j.at("delta_max_pairs").get<std::size_t>();
  }
  if (j.contains("story_length_words") && !j.at("story_length_words").is_null()) {
    c.story_length_words = j.at("story_length_words").get<std::size_t>();
  }
  if (j.contains("embedding")) {
    c.embedding_url = get_or<std::string>(j.at("embedding"), "url", "");
    c.embedding_dim = get_or<std::size_t>(j.at("embedding"), "dim", c.embedding_dim);
  }
  if (c.methods.empty()) throw Error(ErrorCode::InvalidArgument, "config lists no generation methods");
  std::sort(c.methods.begin(), c.methods.end());
  c.methods.erase(std::unique(c.methods.begin(), c.methods.end()), c.methods.end());
  std::sort(c.judge_modes.begin(), c.judge_modes.end());
  c.judge_modes.erase(std::unique(c.judge_modes.begin(), c.judge_modes.end()), c.judge_modes.end());
  return c;
}

json config_to_json(const RunConfig& c) {
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(method_key(m));
  json modes = json::array();
  for (auto m : c.judge_modes) modes.push_back(judge_mode_key(m));
  return {
      {"dataset", c.dataset_path.string()},
      {"output_dir", c.output_dir.string()},
      {"backend", {{"kind", c.backend.kind}, {"mock_path", c.backend.mock_path.string()}, {"url", c.backend.url}}},
      {"models", {{"profiling", c.models.profiling}, {"story", c.models.story}, {"judge", c.models.judge}}},
      {"split_ratio", c.split_ratio},
      {"k_shots", c.k_shots},
      {"methods", methods},
      {"judge_modes", modes},
      {"excluded_category", c.excluded_category ? json(category_key(*c.excluded_category)) : json(nullptr)},
      {"seed", c.seed},
      {"workers", c.workers},
      {"delta_demos", c.delta_demos},
      {"delta_max_pairs", c.delta_max_pairs ? json(*c.delta_max_pairs) : json(nullptr)},
      {"story_length_words", c.story_length_words ? json(*c.story_length_words) : json(nullptr)},
      {"embedding", {{"url", c.embedding_url}, {"dim", c.embedding_dim}}},
  };
}

RunConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Gateways

std::unique_ptr<Gateways> Gateways::from_config(const RunConfig& config) {
  auto g = std::unique_ptr<Gateways>(new Gateways());
  const auto& kind = config.backend.kind;
  if (kind == "mock" || kind == "synthetic") {
    std::unique_ptr<Backend> backend;
    if (kind == "mock") {
      if (config.backend.mock_path.empty()) throw Error(ErrorCode::InvalidArgument, "mock backend needs mock_path");
      auto mock = std::make_unique<MockBackend>(MockBackend::from_file(config.backend.mock_path));
      g->sequential_ = mock->mode() == MockMode::Script;
      backend = std::move(mock);
    } else {
      backend = std::make_unique<FunctionBackend>("synthetic", fixtures::synthetic_responder());
    }
    g->analysis_ = std::make_unique<Gateway>(*backend);
    g->story_ = std::make_unique<Gateway>(*backend);
    g->judge_ = std::make_unique<Gateway>(*backend);
    g->owned_.push_back(std::move(backend));
    return g;
  }
  if (kind == "http") {
    auto make = [&](const std::string& model) {
      auto opts = HttpBackend::options_from_env(model);
      if (!opts) {
        if (config.backend.url.empty()) {
          throw Error(ErrorCode::InvalidArgument, "http backend needs GATEWAY_URL or backend.url");
        }
        opts = HttpBackend::Options{};
        opts->url = config.backend.url;
        opts->model = model;
        if (const char* key = std::getenv("GATEWAY_KEY")) opts->api_key = key;
      }
      auto b = std::make_unique<HttpBackend>(*opts);
      auto gw = std::make_unique<Gateway>(*b);
      g->owned_.push_back(std::move(b));
      return gw;
    };
    g->analysis_ = make(config.models.profiling);
    g->story_ = make(config.models.story);
    g->judge_ = make(config.models.judge);
    return g;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown backend kind \"" + kind + "\"");
}

std::unique_ptr<Gateways> Gateways::shared(Backend& backend) {
  auto g = std::unique_ptr<Gateways>(new Gateways());
  g->analysis_ = std::make_unique<Gateway>(backend);
  g->story_ = std::make_unique<Gateway>(backend);
  g->judge_ = std::make_unique<Gateway>(backend);
  auto* mock = dynamic_cast<MockBackend*>(&backend);
  g->sequential_ = mock != nullptr && mock->mode() == MockMode::Script;
  return g;
}

std::size_t Gateways::total_calls() const { return analysis_->calls() + story_->calls() + judge_->calls(); }

// ---------------------------------------------------------------------------
// Files

void write_text_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string author_dir_name(const std::string& author_id) {
  std::string out;
  for (char ch : author_id) {
    const auto u = static_cast<unsigned char>(ch);
    out.push_back(std::isalnum(u) || ch == '_' || ch == '-' || ch == '.' ? ch : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
  }
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  if (!fs::exists(path)) return out;
  for (const auto& line : text::split_lines(read_text_file(path))) {
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
    }
  }
  return out;
}

fs::path stage_dir(const RunConfig& c, const char* stage) { return c.output_dir / stage; }
fs::path author_dir(const RunConfig& c, const char* stage, const std::string& author) {
  return stage_dir(c, stage) / author_dir_name(author);
}

std::vector<AuthorProfile> load_profiles(const RunConfig& c) {
  if (c.dataset_path.empty()) throw Error(ErrorCode::InvalidArgument, "config has no dataset path");
  return load_dataset(c.dataset_path, c.split_ratio);
}

// Runs fn(i) for every author, on up to `workers` threads. Errors are
// rethrown in author order so failures are reported deterministically.
template <typename Fn>
void for_each_author(std::size_t count, std::size_t workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::min(workers, count);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::size_t worker_count(const RunConfig& c, const Gateways& g) { return g.requires_sequential() ? 1 : c.workers; }

GenerationConfig generation_config(const RunConfig& c) {
  GenerationConfig g;
  g.k_shots = c.k_shots;
  g.story_length_words = c.story_length_words;
  g.excluded_category = c.excluded_category;
  g.delta_demos = c.delta_demos;
  return g;
}

bool wants(const RunConfig& c, GenerationMethod m) {
  return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace

// ---------------------------------------------------------------------------
// Stages

StageSummary run_ingest(const RunConfig& config) {
  const auto profiles = load_profiles(config);
  json split = json::array();
  std::string validation = "author_id,timestamp,set,words,violations\n";
  StageSummary s{"ingest", profiles.size(), 0, 0, 0};
  for (const auto& p : profiles) {
    json prof = json::array(), gen = json::array();
    auto emit = [&](const Story& story, const char* set) {
      std::vector<std::string> names;
      for (auto v : validate_story(story)) names.emplace_back(violation_name(v));
      validation += fmt::format("{},{},{},{},{}\n", p.author_id, story.timestamp, set, story.word_count,
                                text::join(names, "|"));
      ++s.items;
    };
    for (const auto& story : p.profiling) {
      prof.push_back(story.timestamp);
      emit(story, "profiling");
    }
    for (const auto& story : p.generation) {
      gen.push_back(story.timestamp);
      emit(story, "generation");
    }
    split.push_back({{"author_id", p.author_id},
                     {"source", source_tag(p.source)},
                     {"profiling", prof},
                     {"generation", gen}});
  }
  write_text_file(stage_dir(config, "ingest") / "split.json", dump(split));
  write_text_file(stage_dir(config, "ingest") / "validation.csv", validation);
  return s;
}

StageSummary run_profile(const RunConfig& config, Gateways& gateways) {
  const auto profiles = load_profiles(config);
  const auto before = gateways.total_calls();
  for_each_author(profiles.size(), worker_count(config, gateways), [&](std::size_t i) {
    const auto& p = profiles[i];
    auto build = build_sheet(p, gateways.analysis());
    auto summary = build_summary(p, gateways.analysis());
    const auto dir = author_dir(config, "profile", p.author_id);
    write_text_file(dir / "sheet.json", dump(sheet_to_json(build.sheet, p.author_id)));
    write_text_file(dir / "sheet.md", render_sheet(build.sheet) + "\n");
    write_text_file(dir / "transcript.json", dump(transcript_to_json(build.transcript)));
    write_text_file(dir / "summary.json", dump(sheet_to_json(summary, p.author_id)));
  });
  return {"profile", profiles.size(), profiles.size() * 2, 0, gateways.total_calls() - before};
}

namespace {

json rules_table_to_json(const std::map<std::string, StoryRules>& table) {
  json out = json::object();
  for (const auto& [wp, rules] : table) out[wp] = rules_to_json(rules);
  return out;
}

std::map<std::string, StoryRules> rules_table_from_json(const json& j) {
  std::map<std::string, StoryRules> out;
  for (const auto& [wp, rules] : j.items()) out.emplace(wp, rules_from_json(rules));
  return out;
}

WritingSheet load_sheet(const fs::path& path, const std::string& what, const std::string& author) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingArtifact, what + " not found at " + path.string() + "; run profile first")
        .with_author(author);
  }
  return sheet_from_json(read_json(path));
}

}  // namespace

StageSummary run_stylize(const RunConfig& config, Gateways& gateways) {
  const auto profiles = load_profiles(config);
  const auto before = gateways.total_calls();
  std::atomic<std::size_t> items{0};
  for_each_author(profiles.size(), worker_count(config, gateways), [&](std::size_t i) {
    const auto& p = profiles[i];
    auto& gw = gateways.analysis();
    const auto pdir = author_dir(config, "profile", p.author_id);
    const bool sheet_methods = wants(config, GenerationMethod::Sheet) || wants(config, GenerationMethod::SheetNoPersona);
    const bool summ_methods = wants(config, GenerationMethod::Summ) || wants(config, GenerationMethod::SummNoPersona);

    json out = json::object();
    try {
      if (sheet_methods) {
        const auto sheet = load_sheet(pdir / "sheet.json", "author writing sheet", p.author_id);
        if (wants(config, GenerationMethod::Sheet)) out["sheet_persona"] = persona_to_json(generate_persona(sheet, gw));
        std::map<std::string, StoryRules> table;
        for (const auto& g : p.generation) {
          try {
            table.emplace(g.prompt.text, rules_from_sheet(sheet, g.prompt, gw));
          } catch (Error& e) {
            e.with_wp(g.prompt.text);
            throw;
          }
        }
        items += table.size();
        out["sheet_rules"] = rules_table_to_json(table);
      }
      if (summ_methods) {
        const auto summary = load_sheet(pdir / "summary.json", "author writing summary", p.author_id);
        if (wants(config, GenerationMethod::Summ)) {
          out["summary_persona"] = persona_to_json(generate_persona(summary, gw));
        }
        std::map<std::string, StoryRules> table;
        for (const auto& g : p.generation) {
          try {
            table.emplace(g.prompt.text, rules_from_sheet(summary, g.prompt, gw));
          } catch (Error& e) {
            e.with_wp(g.prompt.text);
            throw;
          }
        }
        items += table.size();
        out["summary_rules"] = rules_table_to_json(table);
      }
      if (wants(config, GenerationMethod::Delta)) {
        const auto tpath = pdir / "transcript.json";
        if (!fs::exists(tpath)) throw Error(ErrorCode::MissingArtifact, "profile transcript not found; run profile first");
        const auto transcript = transcript_from_json(read_json(tpath));
        if (transcript.size() != p.profiling.size()) {
          throw Error(ErrorCode::MissingArtifact, "profile transcript does not match the profiling set");
        }
        std::vector<std::pair<WritingPrompt, StoryRules>> contrast;
        json profiling_rules = json::array();
        for (std::size_t t = 0; t < p.profiling.size(); ++t) {
          const auto& story = p.profiling[t];
          try {
            auto rules = rules_by_contrast(story.prompt, story, transcript[t].average, gw);
            profiling_rules.push_back({{"wp", story.prompt.text}, {"rules", rules_to_json(rules)}});
            contrast.emplace_back(story.prompt, std::move(rules));
          } catch (Error& e) {
            e.with_wp(story.prompt.text).with_step(static_cast<int>(t + 1));
            throw;
          }
        }
        std::map<std::string, StoryRules> table;
        for (const auto& g : p.generation) {
          try {
            table.emplace(g.prompt.text, rules_fewshot_transfer(contrast, g.prompt, gw, config.delta_max_pairs));
          } catch (Error& e) {
            e.with_wp(g.prompt.text);
            throw;
          }
        }
        items += table.size();
        out["delta_profiling_rules"] = std::move(profiling_rules);
        out["delta_rules"] = rules_table_to_json(table);
      }
      if (wants(config, GenerationMethod::Oracle)) {
        std::map<std::string, StoryRules> table;
        for (const auto& g : p.generation) {
          try {
            auto avg = generate_average_story(g.prompt, gw);
            table.emplace(g.prompt.text, rules_by_contrast(g.prompt, g, avg, gw));
          } catch (Error& e) {
            e.with_wp(g.prompt.text);
            throw;
          }
        }
        items += table.size();
        out["oracle_rules"] = rules_table_to_json(table);
      }
    } catch (Error& e) {
      e.with_author(p.author_id);
      throw;
    }
    write_text_file(author_dir(config, "stylize", p.author_id) / "artifacts.json", dump(out));
  });
  return {"stylize", profiles.size(), items.load(), 0, gateways.total_calls() - before};
}

ArtifactStore load_artifact_store(const RunConfig& config, const std::string& author_id) {
  ArtifactStore store;
  const auto pdir = author_dir(config, "profile", author_id);
  if (fs::exists(pdir / "sheet.json")) store.sheet = sheet_from_json(read_json(pdir / "sheet.json"));
  if (fs::exists(pdir / "summary.json")) store.summary = sheet_from_json(read_json(pdir / "summary.json"));
  const auto apath = author_dir(config, "stylize", author_id) / "artifacts.json";
  if (!fs::exists(apath)) return store;
  const auto j = read_json(apath);
  if (j.contains("sheet_persona")) store.sheet_persona = persona_from_json(j.at("sheet_persona"));
  if (j.contains("summary_persona")) store.summary_persona = persona_from_json(j.at("summary_persona"));
  if (j.contains("sheet_rules")) store.sheet_rules = rules_table_from_json(j.at("sheet_rules"));
  if (j.contains("summary_rules")) store.summary_rules = rules_table_from_json(j.at("summary_rules"));
  if (j.contains("delta_rules")) store.delta_rules = rules_table_from_json(j.at("delta_rules"));
  if (j.contains("oracle_rules")) store.oracle_rules = rules_table_from_json(j.at("oracle_rules"));
  return store;
}

namespace {

std::string story_key(const std::string& author, const std::string& wp, GenerationMethod m) {
  return author + '\x1f' + wp + '\x1f' + std::string(method_key(m));
}

fs::path stories_path(const RunConfig& c) { return stage_dir(c, "generate") / "stories.jsonl"; }
fs::path verdicts_path(const RunConfig& c) { return stage_dir(c, "judge") / "verdicts.jsonl"; }

std::vector<GeneratedStory> load_stories(const RunConfig& c) {
  std::vector<GeneratedStory> out;
  for (const auto& j : read_jsonl(stories_path(c))) out.push_back(generated_from_json(j));
  return out;
}

}  // namespace

StageSummary run_generate(const RunConfig& config, Gateways& gateways) {
  const auto profiles = load_profiles(config);
  const auto before = gateways.total_calls();
  std::map<std::string, GeneratedStory> existing;
  for (auto& s : load_stories(config)) {
    auto key = story_key(s.author_id, s.wp.text, s.method);
    existing.emplace(std::move(key), std::move(s));
  }
  const auto gen_config = generation_config(config);

  std::vector<std::vector<GeneratedStory>> per_author(profiles.size());
  std::atomic<std::size_t> reused{0};
  for_each_author(profiles.size(), worker_count(config, gateways), [&](std::size_t i) {
    const auto& p = profiles[i];
    const auto store = load_artifact_store(config, p.author_id);
    for (const auto& g : p.generation) {
      const auto target = target_from_story(g);
      for (auto method : config.methods) {
        try {
          const auto request = prepare_request(method, p, target, store, gen_config);
          auto it = existing.find(story_key(p.author_id, g.prompt.text, method));
          if (it != existing.end() && it->second.inputs_digest == fingerprint(request)) {
            per_author[i].push_back(it->second);
            ++reused;
            continue;
          }
        } catch (Error& e) {
          e.with_author(p.author_id).with_wp(g.prompt.text);
          throw;
        }
        per_author[i].push_back(generate_story(method, p, target, store, gen_config, gateways.story()));
      }
    }
  });
  std::string out;
  std::size_t n = 0;
  for (const auto& list : per_author) {
    for (const auto& s : list) {
      out += generated_to_json(s).dump() + "\n";
      ++n;
    }
  }
  write_text_file(stories_path(config), out);
  return {"generate", profiles.size(), n, reused.load(), gateways.total_calls() - before};
}

StageSummary run_judge(const RunConfig& config, Gateways& gateways) {
  const auto profiles = load_profiles(config);
  const auto before = gateways.total_calls();
  std::map<std::string, const GeneratedStory*> stories;
  const auto all_stories = load_stories(config);
  for (const auto& s : all_stories) stories[story_key(s.author_id, s.wp.text, s.method)] = &s;
  std::map<std::string, PairVerdict> existing;
  for (const auto& j : read_jsonl(verdicts_path(config))) {
    auto v = verdict_from_json(j);
    existing[story_key(v.author_id, v.wp, v.method) + '\x1f' + std::string(judge_mode_key(v.mode))] = std::move(v);
  }

  std::vector<std::vector<PairVerdict>> per_author(profiles.size());
  std::atomic<std::size_t> reused{0};
  for_each_author(profiles.size(), worker_count(config, gateways), [&](std::size_t i) {
    const auto& p = profiles[i];
    std::optional<WritingSheet> summary;
    const auto spath = author_dir(config, "profile", p.author_id) / "summary.json";
    if (fs::exists(spath)) summary = sheet_from_json(read_json(spath));
    for (const auto& g : p.generation) {
      auto find_story = [&](GenerationMethod m) -> const GeneratedStory& {
        auto it = stories.find(story_key(p.author_id, g.prompt.text, m));
        if (it == stories.end()) {
          throw Error(ErrorCode::MissingArtifact,
                      "no generated " + std::string(method_display_name(m)) + " story; run generate first")
              .with_author(p.author_id)
              .with_wp(g.prompt.text);
        }
        return *it->second;
      };
      for (auto method : config.methods) {
        if (method == GenerationMethod::AverageAuthor) continue;
        const auto& candidate = find_story(method);
        const auto& baseline = find_story(GenerationMethod::AverageAuthor);
        for (auto mode : config.judge_modes) {
          JudgeReference ref;
          std::string ref_text;
          if (mode == JudgeMode::Faithfulness) {
            if (!summary) {
              throw Error(ErrorCode::MissingArtifact, "author writing summary not found; run profile first")
                  .with_author(p.author_id);
            }
            ref.summary = summary;
            for (auto c : kCategories) ref_text += faithfulness_reference(*summary, c) + "\n";
          } else {
            ref.ground_truth = g.text;
            ref_text = g.text;
          }
          const auto seed = derive_pair_seed(config.seed, p.author_id, g.prompt.text, method, mode);
          const auto digest = hex64(text::fnv1a64(candidate.text + '\x1f' + baseline.text + '\x1f' + ref_text, seed));
          auto it = existing.find(story_key(p.author_id, g.prompt.text, method) + '\x1f' +
                                  std::string(judge_mode_key(mode)));
          if (it != existing.end() && it->second.inputs_digest == digest && it->second.shuffle_seed == seed) {
            per_author[i].push_back(it->second);
            ++reused;
            continue;
          }
          auto v = judge_pair(mode, ref, p.author_id, g.prompt, method, candidate.text, baseline.text, seed,
                              gateways.judge());
          v.inputs_digest = digest;
          per_author[i].push_back(std::move(v));
        }
      }
    }
  });
  std::string out;
  std::size_t n = 0;
  for (const auto& list : per_author) {
    for (const auto& v : list) {
      out += verdict_to_json(v).dump() + "\n";
      ++n;
    }
  }
  write_text_file(verdicts_path(config), out);
  return {"judge", profiles.size(), n, reused.load(), gateways.total_calls() - before};
}

StageSummary run_metrics(const RunConfig& config) {
  const auto profiles = load_profiles(config);
  if (!fs::exists(stories_path(config))) {
    throw Error(ErrorCode::MissingArtifact, "no generated stories; run generate first");
  }
  const auto stories = load_stories(config);
  std::unique_ptr<EmbeddingProvider> provider;
  if (config.embedding_url.empty()) {
    provider = std::make_unique<HashingEmbeddingProvider>(config.embedding_dim);
  } else {
    const char* key = std::getenv("EMBEDDING_KEY");
    provider = std::make_unique<HttpEmbeddingProvider>(config.embedding_url, config.embedding_dim, key ? key : "");
  }
  const auto rows = compute_metric_rows(profiles, stories, provider.get());
  write_text_file(stage_dir(config, "metrics") / "metrics.csv", metric_rows_to_csv(rows));
  return {"metrics", profiles.size(), rows.size(), 0, 0};
}

StageSummary run_report(const RunConfig& config) {
  if (!fs::exists(verdicts_path(config))) throw Error(ErrorCode::MissingArtifact, "no verdicts; run judge first");
  std::vector<PairVerdict> verdicts;
  for (const auto& j : read_jsonl(verdicts_path(config))) verdicts.push_back(verdict_from_json(j));
  const auto report = aggregate(verdicts);
  write_text_file(stage_dir(config, "report") / "winrates.csv", report_to_csv(report));
  write_text_file(stage_dir(config, "report") / "winrates.json", dump(report_to_json(report)));
  return {"report", 0, report.cells.size(), 0, 0};
}

std::vector<StageSummary> run_pipeline(const RunConfig& config, Gateways& gateways) {
  std::vector<StageSummary> out;
  out.push_back(run_ingest(config));
  out.push_back(run_profile(config, gateways));
  out.push_back(run_stylize(config, gateways));
  out.push_back(run_generate(config, gateways));
  out.push_back(run_judge(config, gateways));
  out.push_back(run_metrics(config));
  out.push_back(run_report(config));
  return out;
}

std::string cost_table_csv(std::int64_t max_p, const PriceTable& prices) {
  if (max_p < 1) throw Error(ErrorCode::InvalidArgument, "max p must be at least 1");
  std::string out = "p,sheet_usd,summary_usd\n";
  for (std::int64_t p = 1; p <= max_p; ++p) {
    out += fmt::format("{},{:.2f},{:.2f}\n", p, cost_projection(CostKind::IterativeSheet, p, prices),
                       cost_projection(CostKind::Summary, p, prices));
  }
  return out;
}

}  // namespace storygen
