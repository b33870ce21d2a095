#include "storygen/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "storygen/error.hpp"
#include "storygen/gateway.hpp"
#include "storygen/prompts.hpp"
#include "storygen/text.hpp"

namespace storygen {

using json = nlohmann::json;

namespace {

constexpr std::array<SourceInfo, 5> kSourceInfo = {{
    {SourceKind::Reddit, "reddit", "Reddit", "avg.reddit", "roleplay.reddit", false},
    {SourceKind::AO3, "ao3", "AO3", "avg.ao3", "roleplay.ao3", true},
    {SourceKind::Storium, "storium", "Storium", "avg.storium", "roleplay.storium", false},
    {SourceKind::NMag, "nmag", "N.Mag", "avg.nmag", "roleplay.nmag", false},
    {SourceKind::NYork, "nyork", "N.York", "avg.nyork", "roleplay.nyork", false},
}};

}  // namespace

const SourceInfo& source_info(SourceKind source) { return kSourceInfo[static_cast<std::size_t>(source)]; }

std::string_view source_tag(SourceKind source) { return source_info(source).tag; }

SourceKind source_from_tag(std::string_view tag) {
  for (const auto& info : kSourceInfo) {
    if (info.tag == tag) return info.id;
  }
  throw Error(ErrorCode::UnknownSource, "unknown source \"" + std::string(tag) + "\"");
}

Story make_story(std::string author_id, WritingPrompt prompt, std::string text, int timestamp,
                 std::optional<Metadata> metadata) {
  Story s;
  s.author_id = std::move(author_id);
  s.prompt = std::move(prompt);
  s.word_count = text::word_count(text);
  s.text = std::move(text);
  s.timestamp = timestamp;
  s.metadata = std::move(metadata);
  return s;
}

std::size_t profiling_count(std::size_t n, double ratio) {
  if (n < 2) throw Error(ErrorCode::InsufficientStories, "need at least 2 stories to split, got " + std::to_string(n));
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::InvalidArgument, "split ratio must lie in (0,1)");
  // The epsilon keeps 0.7 * 10 from landing on 6.999...
  auto p = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  p = std::max<std::size_t>(p, 1);
  return std::min(p, n - 1);
}

Split chronological_split(const std::vector<Story>& stories, double ratio) {
  const auto p = profiling_count(stories.size(), ratio);
  for (std::size_t i = 1; i < stories.size(); ++i) {
    if (stories[i].timestamp <= stories[i - 1].timestamp) {
      throw Error(ErrorCode::InvalidArgument, "stories must be sorted by strictly increasing timestamp");
    }
  }
  Split out;
  out.profiling.assign(stories.begin(), stories.begin() + static_cast<std::ptrdiff_t>(p));
  out.generation.assign(stories.begin() + static_cast<std::ptrdiff_t>(p), stories.end());
  return out;
}

namespace {

Metadata parse_metadata(const json& j, std::size_t line_no) {
  if (!j.is_object()) {
    throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": metadata must be an object");
  }
  Metadata m;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      m[key] = value.get<std::string>();
    } else if (value.is_array()) {
      std::vector<std::string> parts;
      for (const auto& v : value) parts.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      m[key] = text::join(parts, ", ");
    } else if (!value.is_null()) {
      m[key] = value.dump();
    }
  }
  return m;
}

struct RawRecord {
  Story story;
  std::size_t line_no;
};

RawRecord parse_record(const std::string& line, std::size_t line_no) {
  const auto where = "line " + std::to_string(line_no) + ": ";
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, where + "invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, where + "record must be a JSON object");

  auto require_string = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string()) {
      throw Error(ErrorCode::MalformedRecord, where + "missing string field \"" + key + "\"");
    }
    return j[key].get<std::string>();
  };

  Story s;
  s.author_id = require_string("author_id");
  if (s.author_id.empty()) throw Error(ErrorCode::MalformedRecord, where + "empty author_id");
  try {
    s.prompt.source = source_from_tag(require_string("source"));
  } catch (const Error& e) {
    throw Error(ErrorCode::UnknownSource, where + e.detail());
  }
  if (!j.contains("timestamp") || !j["timestamp"].is_number_integer()) {
    throw Error(ErrorCode::MalformedRecord, where + "missing integer field \"timestamp\"");
  }
  s.timestamp = j["timestamp"].get<int>();
  s.prompt.text = require_string("prompt");
  if (text::trim(s.prompt.text).empty()) throw Error(ErrorCode::MalformedRecord, where + "empty prompt");
  s.text = require_string("text");
  s.word_count = text::word_count(s.text);
  if (j.contains("metadata") && !j["metadata"].is_null()) s.metadata = parse_metadata(j["metadata"], line_no);
  if (j.contains("date") && j["date"].is_string()) s.published = j["date"].get<std::string>();
  return {std::move(s), line_no};
}

}  // namespace

std::vector<AuthorProfile> parse_dataset(std::string_view jsonl, double ratio) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<RawRecord>> by_author;

  auto lines = text::split_lines(jsonl);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    auto rec = parse_record(lines[i], i + 1);
    auto& bucket = by_author[rec.story.author_id];
    if (bucket.empty()) order.push_back(rec.story.author_id);
    bucket.push_back(std::move(rec));
  }

  std::vector<AuthorProfile> profiles;
  profiles.reserve(order.size());
  for (const auto& author : order) {
    auto& recs = by_author[author];
    std::stable_sort(recs.begin(), recs.end(),
                     [](const RawRecord& a, const RawRecord& b) { return a.story.timestamp < b.story.timestamp; });
    for (std::size_t i = 1; i < recs.size(); ++i) {
      if (recs[i].story.timestamp == recs[i - 1].story.timestamp) {
        throw Error(ErrorCode::DuplicateTimestamp,
                    "line " + std::to_string(recs[i].line_no) + ": duplicate timestamp " +
                        std::to_string(recs[i].story.timestamp) + " for author " + author);
      }
      if (recs[i].story.prompt.source != recs[0].story.prompt.source) {
        throw Error(ErrorCode::InconsistentSource,
                    "line " + std::to_string(recs[i].line_no) + ": author " + author + " spans several sources");
      }
    }
    std::vector<Story> stories;
    stories.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      recs[i].story.timestamp = static_cast<int>(i + 1);
      stories.push_back(std::move(recs[i].story));
    }
    AuthorProfile profile;
    profile.author_id = author;
    profile.source = stories.front().prompt.source;
    try {
      auto split = chronological_split(stories, ratio);
      profile.profiling = std::move(split.profiling);
      profile.generation = std::move(split.generation);
    } catch (Error& e) {
      e.with_author(author);
      throw;
    }
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

std::vector<AuthorProfile> load_dataset(const std::filesystem::path& path, double ratio) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open dataset " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), ratio);
}

std::string dump_dataset(const std::vector<AuthorProfile>& profiles) {
  std::string out;
  auto emit = [&](const Story& s) {
    json j = {
        {"author_id", s.author_id},
        {"source", source_tag(s.prompt.source)},
        {"timestamp", s.timestamp},
        {"prompt", s.prompt.text},
        {"text", s.text},
    };
    if (s.metadata) j["metadata"] = *s.metadata;
    if (s.published) j["date"] = *s.published;
    out += j.dump();
    out += '\n';
  };
  for (const auto& p : profiles) {
    for (const auto& s : p.profiling) emit(s);
    for (const auto& s : p.generation) emit(s);
  }
  return out;
}

void save_dataset(const std::vector<AuthorProfile>& profiles, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write dataset " + path.string());
  out << dump_dataset(profiles);
}

std::string_view violation_name(Violation v) {
  switch (v) {
    case Violation::TooShort: return "TooShort";
    case Violation::TooLong: return "TooLong";
    case Violation::MissingMetadata: return "MissingMetadata";
  }
  return "Unknown";
}

std::vector<Violation> validate_story(const Story& story) {
  std::vector<Violation> out;
  const auto words = text::word_count(story.text);
  if (words < kMinStoryWords) out.push_back(Violation::TooShort);
  if (words > kMaxStoryWords) out.push_back(Violation::TooLong);
  if (source_info(story.prompt.source).requires_metadata && (!story.metadata || story.metadata->empty())) {
    out.push_back(Violation::MissingMetadata);
  }
  return out;
}

WritingPrompt enrich_prompt(std::string_view story_text, SourceKind source,
                            const std::vector<std::pair<std::string, std::string>>& fewshot, Gateway& gateway) {
  if (text::trim(story_text).empty()) throw Error(ErrorCode::EmptyInput, "story text is empty");
  auto tmpl = prompts::enrich_prompt();
  std::vector<FewShotTurn> turns;
  turns.reserve(fewshot.size());
  for (const auto& [story, prompt] : fewshot) turns.push_back({"Story:\n" + story, prompt});
  auto request = make_request(Role::Enrich, tmpl.system, tmpl.user + "\n\nStory:\n" + std::string(story_text),
                              std::move(turns));
  auto completion = gateway.complete(request);
  return WritingPrompt{text::trim(completion.text), source};
}

}  // namespace storygen
