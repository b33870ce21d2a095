#include "storygen/profiler.hpp"

#include <spdlog/spdlog.h>

#include "parse_retry.hpp"
#include "storygen/error.hpp"
#include "storygen/text.hpp"

namespace storygen {

using json = nlohmann::json;

namespace {

WritingSheet parse_block(std::string_view reply, std::string_view tag, SheetKind kind) {
  auto parsed = parse_sheet(extract_block(reply, tag), kind);
  for (const auto& w : parsed.warnings) spdlog::debug("sheet parse: {}", w);
  return std::move(parsed.sheet);
}

void require_text(std::string_view s, std::string_view what) {
  if (text::trim(s).empty()) throw Error(ErrorCode::PreconditionViolated, std::string(what) + " is empty");
}

}  // namespace

AverageStory generate_average_story(const WritingPrompt& wp, Gateway& gateway, const prompts::PromptCatalog& catalog) {
  require_text(wp.text, "writing prompt");
  const auto& tmpl = catalog.average_author(wp.source);
  auto request = make_request(Role::Avg, tmpl.system, tmpl.user + "\n\nWriting Prompt: " + wp.text);
  auto completion = gateway.complete(request);
  if (text::trim(completion.text).empty()) throw Error(ErrorCode::ProviderError, "average story reply is empty");
  return AverageStory{wp, std::move(completion.text), wp.source};
}

WritingSheet intermediate_sheet(const WritingPrompt& wp, const Story& author_story, const AverageStory& average,
                                Gateway& gateway) {
  require_text(wp.text, "writing prompt");
  require_text(author_story.text, "author story");
  require_text(average.text, "average story");
  const auto tmpl = prompts::intermediate_sheet();
  std::string user = tmpl.user;
  user += "\n\nWriting Prompt: " + wp.text;
  user += "\n\nAuthor-Written Story:\n" + author_story.text;
  user += "\n\nBase Story:\n" + average.text;
  auto request = make_request(Role::Sheet, tmpl.system, std::move(user));
  return detail::complete_and_parse(gateway, request, ErrorCode::SheetParseFailed, [](const std::string& reply) {
    return parse_block(reply, "writing_style", SheetKind::Iterative);
  });
}

WritingSheet finalize_combined(WritingSheet merged, int step) {
  if (step < 1) throw Error(ErrorCode::PreconditionViolated, "combine step must be >= 1");
  merged.kind = SheetKind::Iterative;
  for (auto c : kCategories) {
    auto& list = merged[c];
    std::vector<ClaimEvidence> grouped;
    std::vector<ClaimEvidence> plain;
    for (auto& ce : list) {
      if (detect_degenerate_evidence(ce)) {
        spdlog::debug("dropping degenerate evidence for claim \"{}\"", ce.claim);
        continue;
      }
      if (!ce.story_ref) ce.story_ref = step;
      if (*ce.story_ref > step) {
        throw Error(ErrorCode::RefOutOfRange, "story ref [" + std::to_string(*ce.story_ref) + "] exceeds step " +
                                                  std::to_string(step) + " in " + std::string(category_name(c)));
      }
      (ce.grouped ? grouped : plain).push_back(std::move(ce));
    }
    list.clear();
    for (auto& ce : grouped) {
      if (list.size() == kMaxClaimsPerCategory) break;
      list.push_back(std::move(ce));
    }
    for (auto& ce : plain) {
      if (list.size() == kMaxClaimsPerCategory) break;
      list.push_back(std::move(ce));
    }
  }
  return merged;
}

WritingSheet combine(const WritingSheet& prev, const WritingSheet& intermediate, int step, Gateway& gateway) {
  if (step < 1) throw Error(ErrorCode::PreconditionViolated, "combine step must be >= 1");
  for (auto c : kCategories) {
    for (const auto& ce : prev[c]) {
      if (ce.story_ref && *ce.story_ref >= step) {
        throw Error(ErrorCode::PreconditionViolated, "previous sheet refers to story [" +
                                                         std::to_string(*ce.story_ref) + "] at step " +
                                                         std::to_string(step));
      }
    }
  }
  // New evidence comes from story `step`; tag it before the model sees it.
  WritingSheet current = intermediate;
  for (auto& list : current.entries) {
    for (auto& ce : list) ce.story_ref = step;
  }

  const auto tmpl = prompts::combine_sheets();
  std::string user = tmpl.user;
  user += "\n\n<previous_sheet>\n" + render_sheet(prev) + "\n</previous_sheet>";
  user += "\n\n<current_sheet>\n" + render_sheet(current) + "\n</current_sheet>";
  auto request = make_request(Role::Combine, tmpl.system, std::move(user));
  auto merged = detail::complete_and_parse(gateway, request, ErrorCode::SheetParseFailed, [](const std::string& reply) {
    return parse_block(reply, "combined_author_sheet", SheetKind::Iterative);
  });
  return finalize_combined(std::move(merged), step);
}

SheetBuild build_sheet(const AuthorProfile& profile, Gateway& gateway, const prompts::PromptCatalog& catalog) {
  if (profile.profiling.empty()) {
    throw Error(ErrorCode::PreconditionViolated, "profiling set is empty").with_author(profile.author_id);
  }
  SheetBuild out;
  out.author_id = profile.author_id;
  out.sheet.kind = SheetKind::Iterative;
  int step = 0;
  for (const auto& story : profile.profiling) {
    ++step;
    try {
      SheetStep record;
      record.step = step;
      record.average = generate_average_story(story.prompt, gateway, catalog);
      record.intermediate = intermediate_sheet(story.prompt, story, record.average, gateway);
      record.combined = combine(out.sheet, record.intermediate, step, gateway);
      out.sheet = record.combined;
      out.transcript.push_back(std::move(record));
    } catch (Error& e) {
      e.with_step(step).with_author(profile.author_id).with_wp(story.prompt.text);
      throw;
    }
  }
  return out;
}

WritingSheet build_summary(const AuthorProfile& profile, Gateway& gateway) {
  if (profile.profiling.empty()) {
    throw Error(ErrorCode::PreconditionViolated, "profiling set is empty").with_author(profile.author_id);
  }
  const auto tmpl = prompts::writing_summary();
  std::string user = tmpl.user + "\n\nAuthor History:";
  int k = 0;
  for (const auto& story : profile.profiling) {
    ++k;
    user += "\n\n[" + std::to_string(k) + "] Writing Prompt: " + story.prompt.text;
    user += "\nAuthor-Written Story:\n" + story.text;
  }
  auto request = make_request(Role::Summary, tmpl.system, std::move(user));
  try {
    return detail::complete_and_parse(gateway, request, ErrorCode::SheetParseFailed, [](const std::string& reply) {
      return parse_block(reply, "writing_style", SheetKind::Summary);
    });
  } catch (Error& e) {
    e.with_author(profile.author_id);
    throw;
  }
}

// ---------------------------------------------------------------------------

json sheet_to_json(const WritingSheet& sheet, const std::string& author_id) {
  json cats = json::object();
  for (auto c : kCategories) {
    json arr = json::array();
    for (const auto& ce : sheet[c]) {
      arr.push_back({
          {"claim", ce.claim},
          {"evidence", ce.evidence},
          {"framing", ce.framing ? json(*ce.framing) : json(nullptr)},
          {"ref", ce.story_ref ? json(*ce.story_ref) : json(nullptr)},
          {"grouped", ce.grouped},
      });
    }
    cats[std::string(category_name(c))] = std::move(arr);
  }
  return {{"author_id", author_id}, {"kind", sheet_kind_name(sheet.kind)}, {"categories", std::move(cats)}};
}

WritingSheet sheet_from_json(const json& j) {
  try {
    WritingSheet sheet;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "iterative") {
      sheet.kind = SheetKind::Iterative;
    } else if (kind == "summary") {
      sheet.kind = SheetKind::Summary;
    } else {
      throw Error(ErrorCode::MalformedRecord, "unknown sheet kind \"" + kind + "\"");
    }
    const auto& cats = j.at("categories");
    for (auto c : kCategories) {
      const auto key = std::string(category_name(c));
      if (!cats.contains(key)) continue;
      for (const auto& e : cats.at(key)) {
        std::optional<int> ref;
        if (e.contains("ref") && !e.at("ref").is_null()) ref = e.at("ref").get<int>();
        auto ce = make_claim_evidence(e.at("claim").get<std::string>(), e.at("evidence").get<std::string>(), ref,
                                      e.value("grouped", false));
        sheet[c].push_back(std::move(ce));
      }
    }
    return sheet;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("bad sheet JSON: ") + e.what());
  }
}

json transcript_to_json(const std::vector<SheetStep>& transcript) {
  json arr = json::array();
  for (const auto& s : transcript) {
    arr.push_back({
        {"step", s.step},
        {"average", {{"prompt", s.average.prompt.text}, {"source", source_tag(s.average.source)}, {"text", s.average.text}}},
        {"intermediate", sheet_to_json(s.intermediate, "")["categories"]},
        {"combined", sheet_to_json(s.combined, "")["categories"]},
    });
  }
  return arr;
}

std::vector<SheetStep> transcript_from_json(const json& j) {
  std::vector<SheetStep> out;
  try {
    for (const auto& e : j) {
      SheetStep s;
      s.step = e.at("step").get<int>();
      const auto& avg = e.at("average");
      s.average.source = source_from_tag(avg.at("source").get<std::string>());
      s.average.prompt = WritingPrompt{avg.at("prompt").get<std::string>(), s.average.source};
      s.average.text = avg.at("text").get<std::string>();
      s.intermediate = sheet_from_json({{"kind", "iterative"}, {"categories", e.at("intermediate")}});
      s.combined = sheet_from_json({{"kind", "iterative"}, {"categories", e.at("combined")}});
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("bad transcript JSON: ") + e.what());
  }
  return out;
}

}  // namespace storygen
