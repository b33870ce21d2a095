#include "storygen/tagparse.hpp"

#include <cctype>
#include <regex>

#include "storygen/error.hpp"
#include "storygen/text.hpp"

namespace storygen {

std::string_view category_name(Category c) {
  switch (c) {
    case Category::Plot: return "Plot";
    case Category::Creativity: return "Creativity";
    case Category::Development: return "Development";
    case Category::LanguageUse: return "Language Use";
  }
  return "";
}

std::string_view category_long_name(Category c) {
  return c == Category::Development ? "Development (Character and Setting)" : category_name(c);
}

std::string_view category_description(Category c) {
  switch (c) {
    case Category::Plot: return "Story structure, conflict introduction, prompt engagement, and resolution.";
    case Category::Creativity: return "Genre blending, unconventional prompt reinterpretation, and unique elements.";
    case Category::Development: return "Character depth, emotional arcs, and immersive settings.";
    case Category::LanguageUse: return "Diction, style, rhetorical devices, pacing, and dialogue.";
  }
  return "";
}

std::string_view category_key(Category c) {
  switch (c) {
    case Category::Plot: return "plot";
    case Category::Creativity: return "creativity";
    case Category::Development: return "development";
    case Category::LanguageUse: return "language_use";
  }
  return "";
}

std::optional<Category> category_from_key(std::string_view key) {
  for (auto c : kCategories) {
    if (category_key(c) == key) return c;
  }
  return std::nullopt;
}

std::optional<Category> match_category_heading(std::string_view label) {
  std::string s;
  for (char ch : label) {
    if (ch == '*' || ch == '_' || ch == '#' || ch == ':') continue;
    s.push_back(ch);
  }
  s = text::to_lower(text::trim(s));
  if (auto paren = s.find('('); paren != std::string::npos) s = text::trim(s.substr(0, paren));
  if (s == "plot") return Category::Plot;
  if (s == "creativity") return Category::Creativity;
  if (s == "development") return Category::Development;
  if (s == "language use") return Category::LanguageUse;
  return std::nullopt;
}

std::string_view sheet_kind_name(SheetKind kind) {
  return kind == SheetKind::Iterative ? "iterative" : "summary";
}

std::size_t WritingSheet::total() const {
  std::size_t n = 0;
  for (const auto& v : entries) n += v.size();
  return n;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kFramingPrefix = "in the story regarding";

bool is_letter_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

// Opening quote at s[pos]: returns its byte length and the closing sequence.
std::optional<std::pair<std::size_t, std::string_view>> opening_quote(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return std::nullopt;
  if (s[pos] == '"') return std::pair<std::size_t, std::string_view>{1, "\""};
  if (s[pos] == '\'') return std::pair<std::size_t, std::string_view>{1, "'"};
  if (s.substr(pos, 3) == "\xE2\x80\x9C") return std::pair<std::size_t, std::string_view>{3, "\xE2\x80\x9D"};
  if (s.substr(pos, 3) == "\xE2\x80\x98") return std::pair<std::size_t, std::string_view>{3, "\xE2\x80\x99"};
  return std::nullopt;
}

std::string strip_trailing_punct(std::string s) {
  while (!s.empty() && (s.back() == ',' || s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

std::optional<std::string> extract_framing(std::string_view evidence) {
  std::string trimmed = text::trim(evidence);
  std::string_view s = trimmed;
  if (!text::starts_with_ci(s, kFramingPrefix)) return std::nullopt;
  std::size_t pos = kFramingPrefix.size();
  while (pos < s.size() && s[pos] == ' ') ++pos;
  if (auto q = opening_quote(s, pos)) {
    const auto [open_len, close] = *q;
    std::size_t start = pos + open_len;
    std::size_t search = start;
    while (true) {
      auto end = s.find(close, search);
      if (end == std::string_view::npos) break;
      std::size_t after = end + close.size();
      // An apostrophe inside a word ("king's") is not a closing quote.
      if (after < s.size() && is_letter_byte(static_cast<unsigned char>(s[after]))) {
        search = after;
        continue;
      }
      return strip_trailing_punct(text::trim(s.substr(start, end - start)));
    }
  }
  auto comma = s.find(',', pos);
  return strip_trailing_punct(text::trim(s.substr(pos, comma == std::string_view::npos ? s.size() - pos : comma - pos)));
}

ClaimEvidence make_claim_evidence(std::string claim, std::string evidence, std::optional<int> story_ref, bool grouped) {
  ClaimEvidence ce;
  ce.claim = std::move(claim);
  ce.framing = extract_framing(evidence);
  ce.evidence = std::move(evidence);
  ce.story_ref = story_ref;
  ce.grouped = grouped;
  return ce;
}

// ---------------------------------------------------------------------------

std::string extract_block(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  auto last_open = text.rfind(open);
  if (last_open == std::string_view::npos) {
    throw Error(ErrorCode::MissingTag, "no <" + std::string(tag) + "> block in output");
  }
  auto content_start = last_open + open.size();
  auto end = text.find(close, content_start);
  if (end == std::string_view::npos) {
    throw Error(ErrorCode::UnclosedTag, "<" + std::string(tag) + "> block is not closed");
  }
  return text::trim(text.substr(content_start, end - content_start));
}

// ---------------------------------------------------------------------------

namespace {

const std::regex& claim_line_re() {
  static const std::regex re(R"(^(\d+)[.)]\s+(.*)$)");
  return re;
}

const std::regex& evidence_line_re() {
  static const std::regex re(R"(^[-*•]?\s*(?:\*\*|__)?\s*evidence\s*(?:\*\*|__)?\s*:\s*(?:\*\*|__)?\s*(.*)$)",
                             std::regex::icase);
  return re;
}

const std::regex& trailing_ref_re() {
  static const std::regex re(R"(\s*\[(\d+)\]\s*$)");
  return re;
}

bool is_bold_only_line(std::string_view t) {
  if (t.size() < 5 || t.substr(0, 2) != "**") return false;
  std::string_view rest = t.substr(2);
  auto close = rest.find("**");
  if (close == std::string_view::npos) return false;
  std::string tail = text::trim(rest.substr(close + 2));
  return tail.empty() || tail == ":";
}

struct ParsedClaim {
  std::string claim;
  bool grouped = false;
  std::string leftover;
};

ParsedClaim parse_claim_text(std::string_view rest) {
  ParsedClaim out;
  std::string r = text::trim(rest);
  std::string remainder;
  for (std::string_view marker : {"**", "__", "*", "_"}) {
    if (r.rfind(marker, 0) == 0) {
      auto close = r.find(marker, marker.size());
      if (close != std::string::npos) {
        out.claim = text::trim(r.substr(marker.size(), close - marker.size()));
        remainder = text::trim(r.substr(close + marker.size()));
        break;
      }
    }
  }
  if (out.claim.empty() && remainder.empty()) {
    out.claim = r;
  }
  auto lower_rem = text::to_lower(remainder);
  if (auto g = lower_rem.find("(grouped)"); g != std::string::npos) {
    out.grouped = true;
    remainder.erase(g, std::string_view("(grouped)").size());
    remainder = text::trim(remainder);
  } else {
    auto lower_claim = text::to_lower(out.claim);
    constexpr std::string_view kMarker = "(grouped)";
    if (lower_claim.size() >= kMarker.size() && lower_claim.compare(lower_claim.size() - kMarker.size(), kMarker.size(), kMarker) == 0) {
      out.grouped = true;
      out.claim = text::trim(out.claim.substr(0, out.claim.size() - kMarker.size()));
    }
  }
  out.leftover = remainder;
  return out;
}

struct PendingClaim {
  int number = 0;
  Category category = Category::Plot;
  std::string claim;
  bool grouped = false;
  std::optional<std::string> evidence;
};

}  // namespace

SheetParse parse_sheet(std::string_view block, SheetKind kind) {
  SheetParse out;
  out.sheet.kind = kind;
  std::optional<Category> current;
  bool skipping = false;
  bool seen_category = false;
  bool in_evidence = false;
  std::optional<PendingClaim> pending;

  auto finalize = [&]() {
    if (!pending) return;
    PendingClaim p = std::move(*pending);
    pending.reset();
    in_evidence = false;
    if (!p.evidence || text::trim(*p.evidence).empty()) {
      throw Error(ErrorCode::ClaimWithoutEvidence, "claim " + std::to_string(p.number) + " in " +
                                                       std::string(category_name(p.category)) + " has no evidence");
    }
    std::string ev = text::trim(*p.evidence);
    std::optional<int> ref;
    std::smatch m;
    if (std::regex_search(ev, m, trailing_ref_re())) {
      int k = 0;
      try {
        k = std::stoi(m[1].str());
      } catch (const std::exception&) {
        k = 0;
      }
      ev = text::trim(ev.substr(0, static_cast<std::size_t>(m.position(0))));
      if (k >= 1) {
        ref = k;
      } else {
        out.warnings.push_back("claim " + std::to_string(p.number) + ": ignoring invalid story reference");
      }
    }
    if (ev.empty()) {
      throw Error(ErrorCode::ClaimWithoutEvidence,
                  "claim " + std::to_string(p.number) + " in " + std::string(category_name(p.category)) +
                      " has an empty evidence line");
    }
    out.sheet[p.category].push_back(make_claim_evidence(std::move(p.claim), std::move(ev), ref, p.grouped));
  };

  for (const auto& raw : text::split_lines(block)) {
    const std::string t = text::trim(raw);
    if (t.empty()) {
      in_evidence = false;
      continue;
    }
    if (t[0] == '#' || is_bold_only_line(t)) {
      finalize();
      auto cat = match_category_heading(t);
      if (cat) {
        current = cat;
        skipping = false;
        seen_category = true;
      } else {
        out.warnings.push_back("unrecognized heading dropped: " + t);
        current.reset();
        skipping = true;
      }
      continue;
    }
    std::smatch m;
    if (std::regex_match(t, m, claim_line_re())) {
      finalize();
      if (skipping) continue;
      if (!current) {
        out.warnings.push_back("claim outside any category dropped: " + t);
        skipping = true;
        continue;
      }
      auto parsed = parse_claim_text(m[2].str());
      const int number = std::stoi(m[1].str());
      if (parsed.claim.empty()) {
        out.warnings.push_back("empty claim " + std::to_string(number) + " dropped");
        continue;
      }
      if (!parsed.leftover.empty()) {
        out.warnings.push_back("claim " + std::to_string(number) + ": ignored trailing text \"" + parsed.leftover + "\"");
      }
      pending = PendingClaim{number, *current, std::move(parsed.claim), parsed.grouped, std::nullopt};
      continue;
    }
    if (std::regex_match(t, m, evidence_line_re())) {
      if (skipping) continue;
      if (!pending) {
        out.warnings.push_back("evidence without a claim dropped: " + t);
        continue;
      }
      if (pending->evidence) {
        out.warnings.push_back("claim " + std::to_string(pending->number) + ": extra evidence line ignored");
        in_evidence = false;
        continue;
      }
      pending->evidence = m[1].str();
      in_evidence = true;
      continue;
    }
    if (in_evidence && pending) {
      *pending->evidence += " " + t;
      continue;
    }
    if (!skipping) out.warnings.push_back("unparsed line: " + t);
  }
  finalize();

  if (!seen_category) throw Error(ErrorCode::NoCategoriesFound, "no narrative category headings found");
  if (out.sheet.empty()) out.warnings.push_back("sheet has category headings but no claims");
  return out;
}

std::string render_sheet(const WritingSheet& sheet) {
  std::string out;
  for (std::size_t ci = 0; ci < kCategories.size(); ++ci) {
    if (ci) out += "\n\n";
    out += "### ";
    out += category_name(kCategories[ci]);
    const auto& list = sheet.entries[ci];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& ce = list[i];
      out += "\n" + std::to_string(i + 1) + ". **" + ce.claim + "**";
      if (ce.grouped) out += " (grouped)";
      out += "\n   - Evidence: " + ce.evidence;
      if (ce.story_ref) out += " [" + std::to_string(*ce.story_ref) + "]";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::map<std::string, int> parse_scores(std::string_view block, const std::vector<std::string>& labels) {
  if (labels.empty()) throw Error(ErrorCode::InvalidArgument, "parse_scores needs at least one label");
  std::map<std::string, int> out;
  const auto lines = text::split_lines(block);
  for (const auto& label : labels) {
    std::optional<long> found;
    for (const auto& raw : lines) {
      std::string t = text::trim(raw);
      std::size_t i = 0;
      while (i < t.size() && (t[i] == '-' || t[i] == '*' || t[i] == ' ')) ++i;
      std::string_view s = std::string_view(t).substr(i);
      if (!text::starts_with_ci(s, label)) continue;
      s.remove_prefix(label.size());
      auto skip = [&](std::string_view chars) {
        while (!s.empty() && chars.find(s.front()) != std::string_view::npos) s.remove_prefix(1);
      };
      skip("* ");
      if (s.empty() || s.front() != ':') continue;
      s.remove_prefix(1);
      skip("* {[");
      bool neg = false;
      if (!s.empty() && s.front() == '-') {
        neg = true;
        s.remove_prefix(1);
      }
      std::size_t digits = 0;
      while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
      if (digits == 0 || digits > 6) continue;
      long v = std::stol(std::string(s.substr(0, digits)));
      found = neg ? -v : v;
    }
    if (!found) throw Error(ErrorCode::LabelMissing, "no score for \"" + label + "\"");
    if (*found < 1 || *found > 5) {
      throw Error(ErrorCode::ScoreOutOfRange, "score " + std::to_string(*found) + " for \"" + label + "\" is outside 1..5");
    }
    out[label] = static_cast<int>(*found);
  }
  return out;
}

std::string render_scores(const std::map<std::string, int>& scores, const std::vector<std::string>& labels) {
  std::vector<std::string> lines;
  for (const auto& label : labels) lines.push_back(label + ": " + std::to_string(scores.at(label)));
  return text::join(lines, "\n");
}

bool detect_degenerate_evidence(const ClaimEvidence& pair) {
  if (!pair.framing) return true;
  return text::normalize_for_compare(pair.evidence) == text::normalize_for_compare(pair.claim);
}

}  // namespace storygen
