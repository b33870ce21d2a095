#include "storygen/stylist.hpp"

#include <cctype>

#include <spdlog/spdlog.h>

#include "parse_retry.hpp"
#include "storygen/error.hpp"
#include "storygen/prompts.hpp"
#include "storygen/text.hpp"

namespace storygen {

using json = nlohmann::json;

std::string PersonaDescription::full_text() const {
  std::vector<std::string> parts;
  for (const auto& p : paragraphs) {
    if (!p.empty()) parts.push_back(p);
  }
  return text::join(parts, "\n\n");
}

std::size_t PersonaDescription::paragraph_count() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.empty() ? 0 : 1;
  return n;
}

std::string_view provenance_name(RulesProvenance p) {
  switch (p) {
    case RulesProvenance::FromSheet: return "from_sheet";
    case RulesProvenance::FromSummary: return "from_summary";
    case RulesProvenance::Contrast: return "contrast";
    case RulesProvenance::FewShotTransfer: return "fewshot_transfer";
  }
  return "";
}

RulesProvenance provenance_from_name(std::string_view name) {
  for (auto p : {RulesProvenance::FromSheet, RulesProvenance::FromSummary, RulesProvenance::Contrast,
                 RulesProvenance::FewShotTransfer}) {
    if (provenance_name(p) == name) return p;
  }
  throw Error(ErrorCode::MalformedRecord, "unknown rules provenance \"" + std::string(name) + "\"");
}

std::size_t StoryRules::total() const {
  std::size_t n = 0;
  for (const auto& d : directives) n += d.size();
  return n;
}

// ---------------------------------------------------------------------------

PersonaDescription parse_persona(std::string_view block) {
  std::vector<std::string> paragraphs;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) paragraphs.push_back(std::move(cur));
    cur.clear();
  };
  for (const auto& line : text::split_lines(block)) {
    auto t = text::trim(line);
    if (t.empty()) {
      flush();
      continue;
    }
    if (!cur.empty()) cur += ' ';
    cur += t;
  }
  flush();
  if (paragraphs.size() != 4) {
    throw Error(ErrorCode::PersonaParseFailed,
                "expected 4 persona paragraphs, found " + std::to_string(paragraphs.size()));
  }
  PersonaDescription out;
  for (std::size_t i = 0; i < 4; ++i) out.paragraphs[i] = std::move(paragraphs[i]);
  return out;
}

namespace {

struct RulesHeading {
  Category category;
  std::string remainder;
};

std::string strip_bullet(std::string_view t, bool& had_bullet) {
  had_bullet = false;
  std::size_t i = 0;
  if (!t.empty() && (t[0] == '-' || t[0] == '+') ) {
    i = 1;
  } else if (t.size() > 1 && t[0] == '*' && t[1] == ' ') {
    i = 1;
  } else if (t.substr(0, 3) == "\xE2\x80\xA2") {
    i = 3;
  } else {
    std::size_t d = 0;
    while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
    if (d > 0 && d + 1 < t.size() && (t[d] == '.' || t[d] == ')') && t[d + 1] == ' ') i = d + 1;
  }
  if (i == 0) return std::string(t);
  had_bullet = true;
  return text::trim(t.substr(i));
}

std::optional<RulesHeading> match_rules_heading(std::string_view line) {
  bool bullet = false;
  std::string t = strip_bullet(text::trim(line), bullet);
  std::size_t h = 0;
  while (h < t.size() && t[h] == '#') ++h;
  const bool hashed = h > 0;
  t = text::trim(std::string_view(t).substr(h));

  std::string label;
  std::string rest;
  bool explicit_marker = hashed;
  if (t.rfind("**", 0) == 0) {
    auto close = t.find("**", 2);
    if (close == std::string::npos) return std::nullopt;
    label = t.substr(2, close - 2);
    rest = t.substr(close + 2);
    explicit_marker = true;
  } else if (auto colon = t.find(':'); colon != std::string::npos) {
    label = t.substr(0, colon);
    rest = t.substr(colon);
    explicit_marker = true;
  } else {
    label = t;
  }
  auto cat = match_category_heading(label);
  if (!cat) return std::nullopt;
  // A bare "Plot" line without any marker is only a heading when not bulleted.
  if (!explicit_marker && bullet) return std::nullopt;
  rest = text::trim(rest);
  if (!rest.empty() && rest[0] == ':') rest = text::trim(std::string_view(rest).substr(1));
  if (rest.rfind("**", 0) == 0) rest = text::trim(std::string_view(rest).substr(2));
  if (!rest.empty() && (rest[0] == '-' || rest[0] == '*')) rest = text::trim(std::string_view(rest).substr(1));
  return RulesHeading{*cat, rest};
}

}  // namespace

StoryRules parse_rules(std::string_view block, RulesProvenance provenance) {
  StoryRules out;
  out.provenance = provenance;
  std::array<bool, 4> seen{};
  std::optional<Category> current;
  for (const auto& raw : text::split_lines(block)) {
    const auto t = text::trim(raw);
    if (t.empty()) continue;
    if (auto heading = match_rules_heading(t)) {
      current = heading->category;
      seen[static_cast<std::size_t>(*current)] = true;
      if (!heading->remainder.empty()) out[*current].push_back(heading->remainder);
      continue;
    }
    if (!current) {
      spdlog::debug("rules parse: text before first heading ignored: {}", t);
      continue;
    }
    bool bullet = false;
    auto content = strip_bullet(t, bullet);
    auto& list = out[*current];
    if (bullet) {
      if (!content.empty()) list.push_back(std::move(content));
    } else if (!list.empty()) {
      list.back() += " " + content;
    } else {
      list.push_back(std::move(content));
    }
  }
  for (auto c : kCategories) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw Error(ErrorCode::RulesParseFailed, "story rules lack a " + std::string(category_name(c)) + " heading");
    }
  }
  if (out.total() == 0) throw Error(ErrorCode::RulesParseFailed, "story rules contain no directives");
  return out;
}

std::string render_rules(const StoryRules& rules) {
  std::string out;
  for (std::size_t i = 0; i < kCategories.size(); ++i) {
    if (i) out += "\n\n";
    out += "**";
    out += category_long_name(kCategories[i]);
    out += ":**";
    for (const auto& d : rules.directives[i]) out += "\n- " + d;
  }
  return out;
}

// ---------------------------------------------------------------------------

PersonaDescription generate_persona(const WritingSheet& sheet, Gateway& gateway) {
  if (sheet.empty()) throw Error(ErrorCode::PreconditionViolated, "cannot build a persona from an empty sheet");
  const auto tmpl = prompts::persona();
  auto request = make_request(Role::Persona, tmpl.system, tmpl.user + "\n\nAuthor Writing Sheet:\n" + render_sheet(sheet));
  return detail::complete_and_parse(gateway, request, ErrorCode::PersonaParseFailed, [](const std::string& reply) {
    return parse_persona(extract_block(reply, "persona_prompt"));
  });
}

namespace {

StoryRules request_rules(Gateway& gateway, const ChatRequest& request, RulesProvenance provenance) {
  return detail::complete_and_parse(gateway, request, ErrorCode::RulesParseFailed, [&](const std::string& reply) {
    return parse_rules(extract_block(reply, "story_rules"), provenance);
  });
}

void require_text(std::string_view s, std::string_view what) {
  if (text::trim(s).empty()) throw Error(ErrorCode::PreconditionViolated, std::string(what) + " is empty");
}

}  // namespace

StoryRules rules_from_sheet(const WritingSheet& sheet, const WritingPrompt& wp, Gateway& gateway) {
  if (sheet.empty()) throw Error(ErrorCode::PreconditionViolated, "cannot derive rules from an empty sheet");
  require_text(wp.text, "writing prompt");
  const auto tmpl = prompts::rules_from_sheet();
  std::string user = tmpl.user;
  user += "\n\nAuthor Writing Sheet:\n" + render_sheet(sheet);
  user += "\n\nWriting Prompt: " + wp.text;
  auto request = make_request(Role::Rule, tmpl.system, std::move(user));
  auto provenance = sheet.kind == SheetKind::Summary ? RulesProvenance::FromSummary : RulesProvenance::FromSheet;
  return request_rules(gateway, request, provenance);
}

StoryRules rules_by_contrast(const WritingPrompt& wp, const Story& author_story, const AverageStory& average,
                             Gateway& gateway) {
  require_text(wp.text, "writing prompt");
  require_text(author_story.text, "author story");
  require_text(average.text, "average story");
  const auto tmpl = prompts::rules_by_contrast();
  std::string user = tmpl.user;
  user += "\n\nWriting Prompt: " + wp.text;
  user += "\n\nAuthor Written Story:\n" + author_story.text;
  user += "\n\nBase Story:\n" + average.text;
  auto request = make_request(Role::Rule, tmpl.system, std::move(user));
  return request_rules(gateway, request, RulesProvenance::Contrast);
}

StoryRules rules_fewshot_transfer(const std::vector<std::pair<WritingPrompt, StoryRules>>& profiling_rules,
                                  const WritingPrompt& new_wp, Gateway& gateway, std::optional<std::size_t> max_pairs) {
  if (profiling_rules.empty()) throw Error(ErrorCode::PreconditionViolated, "no profiling rules to transfer from");
  require_text(new_wp.text, "writing prompt");
  std::size_t first = 0;
  if (max_pairs && *max_pairs < profiling_rules.size()) {
    if (*max_pairs == 0) throw Error(ErrorCode::InvalidArgument, "max_pairs must be positive");
    first = profiling_rules.size() - *max_pairs;
    spdlog::warn("few-shot rule transfer: keeping the {} most recent of {} demonstrations", *max_pairs,
                 profiling_rules.size());
  }
  std::vector<FewShotTurn> turns;
  for (std::size_t i = first; i < profiling_rules.size(); ++i) {
    const auto& [wp, rules] = profiling_rules[i];
    turns.push_back({"Writing Prompt: " + wp.text, "<story_rules>\n" + render_rules(rules) + "\n</story_rules>"});
  }
  const auto tmpl = prompts::rules_fewshot();
  auto request =
      make_request(Role::Rule, tmpl.system, tmpl.user + "\n\nWriting Prompt: " + new_wp.text, std::move(turns));
  return request_rules(gateway, request, RulesProvenance::FewShotTransfer);
}

Ablated ablate(StoryRules rules, std::optional<PersonaDescription> persona, Category excluded) {
  rules[excluded].clear();
  if (persona) (*persona)[excluded].clear();
  return {std::move(rules), std::move(persona)};
}

// ---------------------------------------------------------------------------

json persona_to_json(const PersonaDescription& persona) {
  json paragraphs = json::object();
  for (auto c : kCategories) paragraphs[std::string(category_name(c))] = persona[c];
  return {{"paragraphs", std::move(paragraphs)}, {"full_text", persona.full_text()}};
}

PersonaDescription persona_from_json(const json& j) {
  try {
    PersonaDescription p;
    const auto& paragraphs = j.at("paragraphs");
    for (auto c : kCategories) p[c] = paragraphs.value(std::string(category_name(c)), "");
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("bad persona JSON: ") + e.what());
  }
}

json rules_to_json(const StoryRules& rules) {
  json directives = json::object();
  for (auto c : kCategories) directives[std::string(category_name(c))] = rules[c];
  return {{"provenance", provenance_name(rules.provenance)}, {"directives", std::move(directives)}};
}

StoryRules rules_from_json(const json& j) {
  try {
    StoryRules r;
    r.provenance = provenance_from_name(j.at("provenance").get<std::string>());
    const auto& directives = j.at("directives");
    for (auto c : kCategories) {
      const auto key = std::string(category_name(c));
      if (directives.contains(key)) r[c] = directives.at(key).get<std::vector<std::string>>();
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("bad rules JSON: ") + e.what());
  }
}

}  // namespace storygen
