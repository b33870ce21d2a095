#include "storygen/fixtures.hpp"

#include <algorithm>
#include <random>
#include <regex>

#include <nlohmann/json.hpp>

#include "storygen/error.hpp"
#include "storygen/pipeline.hpp"
#include "storygen/tagparse.hpp"
#include "storygen/text.hpp"

namespace storygen::fixtures {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Raw engine output only: std distributions are implementation-defined and
// would make fixtures differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(eng_() % n); }
  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

 private:
  std::mt19937_64 eng_;
};

const std::vector<std::string> kCommonWords = {
    "the",   "a",     "and",   "of",    "to",    "in",    "was",   "she",   "he",    "they",  "it",
    "that",  "with",  "for",   "on",    "at",    "from",  "but",   "had",   "would", "could", "not",
    "light", "door",  "night", "water", "hand",  "voice", "road",  "house", "city",  "room",  "sky",
    "time",  "quiet", "cold",  "old",   "small", "long",  "dark",  "warm",  "slow",  "still", "again"};

struct AuthorStyle {
  std::string id;
  SourceKind source;
  std::vector<std::string> words;
  std::size_t min_sentence;
  std::size_t max_sentence;
  double dialogue_rate;
  std::vector<std::string> prompts;
};

const std::vector<AuthorStyle>& styles() {
  static const std::vector<AuthorStyle> s = {
      {"quillfeather",
       SourceKind::Reddit,
       {"grinned", "muttered", "rusty", "spaceship", "coffee", "deadline", "robot", "snapped", "honestly", "weird",
        "laughed", "phone", "alarm", "sarcastic", "glitch", "pizza", "boss", "elevator", "blinked", "shrugged"},
       5,
       11,
       0.35,
       {"You wake up to find every clock in the world has stopped except yours.",
        "A vending machine starts dispensing advice instead of snacks.",
        "The last human on a colony ship discovers the crew was never real.",
        "Your roommate is a retired supervillain who only wants to bake bread."}},
      {"mossgarden",
       SourceKind::AO3,
       {"lantern", "archive", "ivy", "cathedral", "remembered", "tide", "silken", "ember", "longing", "vow",
        "marble", "whispered", "orchard", "heirloom", "dusk", "trembling", "sorrow", "letters", "candle", "harbor"},
       14,
       26,
       0.10,
       {"Two rival archivists are locked in the library overnight during a storm.",
        "A knight returns home years after the war to find her name carved on a memorial.",
        "The lighthouse keeper writes letters to a sailor who never answers.",
        "An apprentice mage must confess a forbidden spell before the winter festival."}},
  };
  return s;
}

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

// Sentences drawn from a bag of words until `target` words are emitted.
std::string compose(Rng& rng, const std::vector<std::string>& bag, std::size_t target, std::size_t min_sentence,
                    std::size_t max_sentence, double dialogue_rate) {
  std::string out;
  std::size_t written = 0;
  std::size_t in_paragraph = 0;
  while (written < target) {
    std::size_t len = min_sentence + rng.below(max_sentence - min_sentence + 1);
    len = std::min(len, target - written);
    const bool dialogue = static_cast<double>(rng.below(1000)) < dialogue_rate * 1000.0;
    std::string sentence;
    for (std::size_t i = 0; i < len; ++i) {
      std::string w = rng.pick(bag);
      if (i == 0) w = capitalize(w);
      sentence += (i ? " " : "") + w;
    }
    sentence += rng.below(6) == 0 ? "?" : ".";
    if (dialogue) sentence = "\"" + sentence + "\"";
    if (!out.empty()) out += in_paragraph >= 5 ? "\n\n" : " ";
    if (in_paragraph >= 5) in_paragraph = 0;
    out += sentence;
    ++in_paragraph;
    written += len;
  }
  return out;
}

std::vector<std::string> merged_bag(const std::vector<std::string>& a, const std::vector<std::string>& b,
                                    std::size_t weight_b) {
  std::vector<std::string> out = a;
  for (std::size_t i = 0; i < weight_b; ++i) out.insert(out.end(), b.begin(), b.end());
  return out;
}

// ---------------------------------------------------------------------------
// Responder helpers

std::uint64_t request_seed(const ChatRequest& r) { return text::fnv1a64(fingerprint(r)); }

std::string after_last(const std::string& s, const std::string& marker) {
  auto pos = s.rfind(marker);
  if (pos == std::string::npos) return {};
  return s.substr(pos + marker.size());
}

std::string first_line(const std::string& s) {
  auto nl = s.find('\n');
  return text::trim(nl == std::string::npos ? s : s.substr(0, nl));
}

std::string target_prompt(const ChatRequest& r) { return first_line(after_last(r.user, "Writing Prompt: ")); }

// Short descriptor for the framing phrase: first few words of the prompt.
std::string descriptor(const std::string& wp) {
  auto words = text::split_whitespace(text::normalize_for_compare(wp));
  if (words.size() > 5) words.resize(5);
  return words.empty() ? "untitled prompt" : text::join(words, " ");
}

std::string between(const std::string& s, const std::string& open, const std::string& close) {
  auto a = s.find(open);
  if (a == std::string::npos) return {};
  a += open.size();
  auto b = s.find(close, a);
  return b == std::string::npos ? std::string() : s.substr(a, b - a);
}

WritingSheet parse_or_empty(const std::string& block, SheetKind kind) {
  try {
    return parse_sheet(block, kind).sheet;
  } catch (const Error&) {
    WritingSheet empty;
    empty.kind = kind;
    return empty;
  }
}

struct ClaimSeed {
  std::string claim;
  std::string evidence;
};

const std::array<std::vector<ClaimSeed>, 4>& claim_pool() {
  static const std::array<std::vector<ClaimSeed>, 4> pool = {{
      {{"The author opens in the middle of the action", "the first line drops the reader into a conflict already underway"},
       {"The author resolves the story with a reversal", "the ending turns the premise back on the protagonist"},
       {"The author keeps the plot to a single location", "every scene stays inside one room or vehicle"},
       {"The author escalates tension in three clear beats", "each scene raises the stakes over the previous one"},
       {"The author leaves the ending open", "the final scene stops before the outcome is shown"},
       {"The author uses a framing device", "the story is told as a recovered letter"}},
      {{"The author subverts the expected genre", "a horror setup becomes a gentle comedy"},
       {"The author invents unusual rules for the world", "time runs backwards only on weekends"},
       {"The author mixes mundane details with the fantastic", "a dragon worries about its rent"},
       {"The author favors playful premises", "the central conflict is a bet between two ghosts"},
       {"The author reimagines familiar myths", "a trickster god works night shifts at a diner"},
       {"The author builds tension through unusual structure", "the scenes arrive in reverse order"}},
      {{"The author reveals character through dialogue", "the narrator's fears surface only in what she says aloud"},
       {"The author grounds settings in sensory detail", "the cabin is described by smell and sound before sight"},
       {"The author gives side characters distinct voices", "the mechanic speaks only in clipped questions"},
       {"The author shows growth through a single choice", "the hero's final decision contradicts her first"},
       {"The author uses weather to mirror mood", "the rain starts as the argument begins"},
       {"The author keeps backstory minimal", "the past is implied through one object"}},
      {{"The author writes in short punchy sentences", "most paragraphs hold two or three brief lines"},
       {"The author uses dry humor in narration", "asides undercut the drama of each scene"},
       {"The author favors lyrical imagery", "light is compared to spilled honey and old glass"},
       {"The author writes in close first person", "the narration stays inside one character's head"},
       {"The author relies on precise verbs", "characters lurch and skitter rather than walk"},
       {"The author repeats a refrain for rhythm", "a single line recurs at each turning point"}},
  }};
  return pool;
}

// Distinct pool indices chosen by the rng.
std::vector<std::size_t> choose(Rng& rng, std::size_t pool_size, std::size_t k) {
  std::vector<std::size_t> idx(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) idx[i] = i;
  for (std::size_t i = 0; i < std::min(k, pool_size); ++i) std::swap(idx[i], idx[i + rng.below(pool_size - i)]);
  idx.resize(std::min(k, pool_size));
  return idx;
}

std::string framed(const std::string& desc, const std::string& evidence) {
  return "In the story regarding \"" + desc + "\", " + evidence + ".";
}

std::string respond_sheet(const ChatRequest& r, Rng& rng) {
  // Claim choice depends on the prompt only, so different stories can repeat
  // claims and the combine step has something to group.
  Rng pick(text::fnv1a64(target_prompt(r)));
  const auto desc = descriptor(target_prompt(r));
  WritingSheet s;
  for (std::size_t ci = 0; ci < 4; ++ci) {
    for (auto i : choose(pick, claim_pool()[ci].size(), 2)) {
      const auto& seed = claim_pool()[ci][i];
      s.entries[ci].push_back(make_claim_evidence(seed.claim, framed(desc, seed.evidence)));
    }
  }
  (void)rng;
  return "<thinking>\nComparing the two stories category by category.\n</thinking>\n<writing_style>\n" +
         render_sheet(s) + "\n</writing_style>";
}

std::string respond_combine(const ChatRequest& r) {
  auto prev = parse_or_empty(between(r.user, "<previous_sheet>\n", "\n</previous_sheet>"), SheetKind::Iterative);
  auto cur = parse_or_empty(between(r.user, "<current_sheet>\n", "\n</current_sheet>"), SheetKind::Iterative);
  WritingSheet out = prev;
  for (std::size_t ci = 0; ci < 4; ++ci) {
    for (const auto& ce : cur.entries[ci]) {
      auto& list = out.entries[ci];
      auto same = std::find_if(list.begin(), list.end(), [&](const ClaimEvidence& p) {
        return text::normalize_for_compare(p.claim) == text::normalize_for_compare(ce.claim);
      });
      if (same != list.end()) {
        same->grouped = true;
      } else {
        list.push_back(ce);
      }
    }
  }
  return "<thinking>\nMerging equivalent claims.\n</thinking>\n<combined_author_sheet>\n" + render_sheet(out) +
         "\n</combined_author_sheet>";
}

std::string respond_summary(const ChatRequest& r, Rng& rng) {
  static const std::regex entry(R"(\[(\d+)\] Writing Prompt: ([^\n]*))");
  std::vector<std::pair<int, std::string>> stories;
  for (std::sregex_iterator it(r.user.begin(), r.user.end(), entry), end; it != end; ++it) {
    stories.emplace_back(std::stoi((*it)[1]), descriptor((*it)[2]));
  }
  if (stories.empty()) stories.emplace_back(1, "untitled prompt");
  WritingSheet s;
  s.kind = SheetKind::Summary;
  for (std::size_t ci = 0; ci < 4; ++ci) {
    std::size_t n = 0;
    for (auto i : choose(rng, claim_pool()[ci].size(), 3)) {
      const auto& seed = claim_pool()[ci][i];
      const auto& [k, desc] = stories[n++ % stories.size()];
      auto ce = make_claim_evidence(seed.claim, framed(desc, seed.evidence));
      ce.story_ref = k;
      s.entries[ci].push_back(std::move(ce));
    }
  }
  return "<thinking>\nReading the whole history.\n</thinking>\n<writing_style>\n" + render_sheet(s) +
         "\n</writing_style>";
}

std::string lower_first(std::string s) {
  if (!s.empty() && s[0] >= 'A' && s[0] <= 'Z') s[0] = static_cast<char>(s[0] - 'A' + 'a');
  return s;
}

std::string respond_persona(const ChatRequest& r) {
  auto sheet = parse_or_empty(after_last(r.user, "Author Writing Sheet:\n"), SheetKind::Iterative);
  static const std::array<std::string, 4> leads = {"As a storyteller you", "Your imagination", "Your characters",
                                                   "Your prose"};
  std::string body;
  for (std::size_t ci = 0; ci < 4; ++ci) {
    if (ci) body += "\n\n";
    body += leads[ci] + " shows a clear habit:";
    if (sheet.entries[ci].empty()) {
      body += " you write with a steady hand.";
      continue;
    }
    for (const auto& ce : sheet.entries[ci]) {
      auto claim = ce.claim;
      const std::string prefix = "The author ";
      if (claim.rfind(prefix, 0) == 0) claim = "you " + claim.substr(prefix.size());
      body += " " + lower_first(claim) + ".";
    }
  }
  return "<persona_prompt>\n" + body + "\n</persona_prompt>";
}

std::string respond_rules(const ChatRequest& r, Rng& rng) {
  auto sheet = parse_or_empty(between(r.user, "Author Writing Sheet:\n", "\n\nWriting Prompt: "), SheetKind::Iterative);
  const auto desc = descriptor(target_prompt(r));
  std::string out = "<story_rules>\n";
  for (std::size_t ci = 0; ci < 4; ++ci) {
    if (ci) out += "\n\n";
    out += "**" + std::string(category_long_name(kCategories[ci])) + ":**";
    std::vector<std::string> directives;
    for (const auto& ce : sheet.entries[ci]) {
      if (directives.size() == 2) break;
      directives.push_back("For \"" + desc + "\", " + lower_first(ce.claim) + ".");
    }
    for (auto i : choose(rng, claim_pool()[ci].size(), 2 - std::min<std::size_t>(2, directives.size()))) {
      directives.push_back("For \"" + desc + "\", " + lower_first(claim_pool()[ci][i].claim) + ".");
    }
    for (const auto& d : directives) out += "\n- " + d;
  }
  return out + "\n</story_rules>";
}

std::string respond_story(const ChatRequest& r, Rng& rng) {
  static const std::regex length(R"(The story should be (\d+) words long)");
  std::size_t words = 300;
  std::smatch m;
  const std::string last_user = r.user;
  if (std::regex_search(last_user, m, length)) words = std::clamp<std::size_t>(std::stoul(m[1]), 50, 900);

  // Vocabulary follows whatever conditioning the request carries, so methods
  // with more author signal drift towards the author's words.
  std::vector<std::string> signal;
  for (const auto& turn : r.few_shot) {
    for (auto& w : text::split_whitespace(text::normalize_for_compare(turn.assistant))) signal.push_back(w);
  }
  for (auto& w : text::split_whitespace(text::normalize_for_compare(after_last(r.user, "Story Rules\n")))) {
    if (w.size() > 3) signal.push_back(w);
  }
  for (auto& w : text::split_whitespace(text::normalize_for_compare(target_prompt(r)))) signal.push_back(w);
  auto bag = merged_bag(kCommonWords, signal, 1);
  return compose(rng, bag, words, 8, 18, 0.2);
}

std::string respond_judge(const ChatRequest& r, Rng& rng) {
  const bool similarity = r.user.find("Human-Written Story:") != std::string::npos;
  const std::string a = similarity ? "Assistant A" : "Story A";
  const std::string b = similarity ? "Assistant B" : "Story B";
  const auto sa = 1 + rng.below(5);
  const auto sb = 1 + rng.below(5);
  return "<thinking>\nWeighing both stories against the reference.\n</thinking>\n<score>\n" + a + ": " +
         std::to_string(sa) + "\n" + b + ": " + std::to_string(sb) + "\n</score>";
}

std::string respond(const ChatRequest& r) {
  Rng rng(request_seed(r));
  switch (r.role) {
    case Role::Avg: {
      auto bag = merged_bag(kCommonWords, text::split_whitespace(text::normalize_for_compare(target_prompt(r))), 1);
      return compose(rng, bag, 320, 9, 16, 0.15);
    }
    case Role::Sheet:
      return respond_sheet(r, rng);
    case Role::Combine:
      return respond_combine(r);
    case Role::Summary:
      return respond_summary(r, rng);
    case Role::Persona:
      return respond_persona(r);
    case Role::Rule:
      return respond_rules(r, rng);
    case Role::StoryGen:
      return respond_story(r, rng);
    case Role::Judge:
      return respond_judge(r, rng);
    case Role::Enrich:
      return "Write a story about " + descriptor(r.user.substr(r.user.size() > 200 ? r.user.size() - 200 : 0)) + ".";
  }
  throw Error(ErrorCode::InvalidArgument, "unknown role");
}

}  // namespace

std::string synthetic_dataset(std::uint64_t seed) {
  std::string out;
  for (const auto& style : styles()) {
    Rng rng(seed ^ text::fnv1a64(style.id));
    auto bag = merged_bag(kCommonWords, style.words, 2);
    for (int t = 1; t <= kFixtureStoriesPerAuthor; ++t) {
      const auto words = 520 + rng.below(300);
      json rec = {{"author_id", style.id},
                  {"source", source_tag(style.source)},
                  {"timestamp", t},
                  {"prompt", style.prompts[static_cast<std::size_t>(t - 1) % style.prompts.size()]},
                  {"text", compose(rng, bag, words, style.min_sentence, style.max_sentence, style.dialogue_rate)},
                  {"date", "2023-0" + std::to_string(t) + "-15"}};
      if (style.source == SourceKind::AO3) {
        static const std::vector<std::string> ratings = {"General Audiences", "Teen And Up Audiences"};
        rec["metadata"] = {{"fandom", "Original Work"},
                           {"rating", rng.pick(ratings)},
                           {"warnings", "No Archive Warnings Apply"},
                           {"relationships", t % 2 ? "Archivist/Archivist" : "Knight & Keeper"}};
      }
      out += rec.dump() + "\n";
    }
  }
  return out;
}

FunctionBackend::Responder synthetic_responder() { return [](const ChatRequest& r) { return respond(r); }; }

FixtureSummary emit_fixture(const fs::path& dir, std::uint64_t seed) {
  FixtureSummary summary;
  write_text_file(dir / "dataset.jsonl", synthetic_dataset(seed));

  RunConfig config;
  config.dataset_path = dir / "dataset.jsonl";
  config.split_ratio = kFixtureSplitRatio;
  config.seed = seed;
  config.workers = 1;

  // Record a live run against the synthetic responder, then replay it from
  // the script so the goldens are exactly what a mock run produces.
  const auto scratch = dir / ".record";
  fs::remove_all(scratch);
  config.output_dir = scratch;
  FunctionBackend synthetic("synthetic", synthetic_responder());
  RecordingBackend recorder(synthetic);
  {
    auto gateways = Gateways::shared(recorder);
    run_pipeline(config, *gateways);
  }
  fs::remove_all(scratch);

  const auto exchanges = recorder.exchanges();
  summary.exchanges = exchanges.size();
  json script = json::array();
  json map = json::object();
  for (const auto& ex : exchanges) {
    script.push_back(ex.response);
    map[fingerprint(ex.request)] = ex.response;
  }
  write_text_file(dir / "mock_script.json", json{{"mode", "script"}, {"responses", script}}.dump(1) + "\n");
  write_text_file(dir / "mock_map.json", json{{"mode", "map"}, {"responses", map}}.dump(1) + "\n");

  json cfg = config_to_json(config);
  cfg["dataset"] = "dataset.jsonl";
  cfg["output_dir"] = "out";
  cfg["backend"] = {{"kind", "mock"}, {"mock_path", "mock_script.json"}, {"url", ""}};
  write_text_file(dir / "config.json", cfg.dump(2) + "\n");

  auto replay = load_config(dir / "config.json");
  replay.output_dir = dir / "golden";
  fs::remove_all(replay.output_dir);
  auto gateways = Gateways::from_config(replay);
  run_pipeline(replay, *gateways);
  std::size_t count = 0;
  for (const auto& entry : fs::recursive_directory_iterator(replay.output_dir)) count += entry.is_regular_file();
  summary.golden_files = count;
  return summary;
}

}  // namespace storygen::fixtures
