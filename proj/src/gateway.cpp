#include "storygen/gateway.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "storygen/error.hpp"
#include "storygen/text.hpp"

namespace storygen {

using json = nlohmann::json;

std::string_view role_name(Role role) {
  switch (role) {
    case Role::Avg: return "avg";
    case Role::Sheet: return "sheet";
    case Role::Combine: return "combine";
    case Role::Summary: return "summary";
    case Role::Persona: return "persona";
    case Role::Rule: return "rule";
    case Role::StoryGen: return "story";
    case Role::Judge: return "judge";
    case Role::Enrich: return "enrich";
  }
  return "unknown";
}

SamplingConfig default_sampling(Role role) {
  if (role == Role::StoryGen) return SamplingConfig{0.7, 0.95, 4096};
  return SamplingConfig{0.0, 1.0, 4096};
}

ChatRequest make_request(Role role, std::string system, std::string user,
                         std::vector<FewShotTurn> few_shot) {
  ChatRequest r;
  r.role = role;
  r.system = std::move(system);
  r.user = std::move(user);
  r.few_shot = std::move(few_shot);
  r.sampling = default_sampling(role);
  return r;
}

void validate_request(const ChatRequest& request) {
  if (text::trim(request.system).empty()) throw Error(ErrorCode::InvalidRequest, "empty system message");
  if (text::trim(request.user).empty()) throw Error(ErrorCode::InvalidRequest, "empty user message");
  for (std::size_t i = 0; i < request.few_shot.size(); ++i) {
    const auto& turn = request.few_shot[i];
    if (turn.user.empty() || turn.assistant.empty()) {
      throw Error(ErrorCode::InvalidRequest, "few-shot turn " + std::to_string(i + 1) + " is incomplete");
    }
  }
  const auto& s = request.sampling;
  if (!(s.temperature >= 0.0) || !(s.top_p > 0.0 && s.top_p <= 1.0) || s.max_tokens <= 0) {
    throw Error(ErrorCode::InvalidRequest, "sampling config out of range");
  }
}

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace

std::string fingerprint(const ChatRequest& request) {
  // nlohmann::json objects keep keys sorted, which gives the canonical order.
  json few = json::array();
  for (const auto& t : request.few_shot) few.push_back(json::array({t.user, t.assistant}));
  json canonical = {
      {"role", role_name(request.role)},
      {"system", request.system},
      {"few_shot", few},
      {"user", request.user},
      {"sampling",
       {{"temperature", request.sampling.temperature},
        {"top_p", request.sampling.top_p},
        {"max_tokens", request.sampling.max_tokens}}},
  };
  return sha256_hex(canonical.dump());
}

Completion complete(const ChatRequest& request, Backend& backend) {
  validate_request(request);
  return backend.complete(request);
}

Completion Gateway::complete(const ChatRequest& request) {
  Completion c = storygen::complete(request, backend_);
  std::lock_guard lock(mu_);
  ++per_role_[static_cast<std::size_t>(request.role)];
  usage_ += c.usage;
  return c;
}

std::size_t Gateway::calls() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (auto c : per_role_) n += c;
  return n;
}

std::size_t Gateway::calls(Role role) const {
  std::lock_guard lock(mu_);
  return per_role_[static_cast<std::size_t>(role)];
}

Usage Gateway::usage() const {
  std::lock_guard lock(mu_);
  return usage_;
}

void Gateway::reset_counters() {
  std::lock_guard lock(mu_);
  per_role_.fill(0);
  usage_ = {};
}

// ---------------------------------------------------------------------------

Usage synthesize_usage(const ChatRequest& request, std::string_view response) {
  std::size_t in = text::word_count(request.system) + text::word_count(request.user);
  for (const auto& t : request.few_shot) in += text::word_count(t.user) + text::word_count(t.assistant);
  return Usage{static_cast<std::int64_t>(in), static_cast<std::int64_t>(text::word_count(response))};
}

MockBackend::MockBackend(MockMode mode, std::deque<std::string> queue,
                         std::map<std::string, std::string> table)
    : mode_(mode), queue_(std::move(queue)), table_(std::move(table)) {}

MockBackend::MockBackend(const MockBackend& other) : mode_(other.mode_) {
  std::lock_guard lock(other.mu_);
  queue_ = other.queue_;
  table_ = other.table_;
  received_ = other.received_;
}

MockBackend MockBackend::script(std::vector<std::string> responses) {
  return MockBackend(MockMode::Script, std::deque<std::string>(responses.begin(), responses.end()), {});
}

MockBackend MockBackend::map(std::map<std::string, std::string> responses) {
  return MockBackend(MockMode::Map, {}, std::move(responses));
}

MockBackend MockBackend::from_json(std::string_view source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("mock fixture is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("mode") || !doc.contains("responses")) {
    throw Error(ErrorCode::InvalidArgument, "mock fixture needs \"mode\" and \"responses\"");
  }
  const auto mode = doc["mode"].get<std::string>();
  if (mode == "script") {
    if (!doc["responses"].is_array()) throw Error(ErrorCode::InvalidArgument, "script responses must be an array");
    return script(doc["responses"].get<std::vector<std::string>>());
  }
  if (mode == "map") {
    if (!doc["responses"].is_object()) throw Error(ErrorCode::InvalidArgument, "map responses must be an object");
    return map(doc["responses"].get<std::map<std::string, std::string>>());
  }
  throw Error(ErrorCode::InvalidArgument, "unknown mock mode \"" + mode + "\"");
}

MockBackend MockBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open mock fixture " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

Completion MockBackend::complete(const ChatRequest& request) {
  std::string text;
  {
    std::lock_guard lock(mu_);
    received_.push_back(request);
    if (mode_ == MockMode::Script) {
      if (queue_.empty()) {
        throw Error(ErrorCode::MockMiss, "script exhausted at request " + fingerprint(request) +
                                             " (role " + std::string(role_name(request.role)) + ")");
      }
      text = std::move(queue_.front());
      queue_.pop_front();
    } else {
      auto fp = fingerprint(request);
      auto it = table_.find(fp);
      if (it == table_.end()) throw Error(ErrorCode::MockMiss, "no response for fingerprint " + fp);
      text = it->second;
    }
  }
  Completion c;
  c.usage = synthesize_usage(request, text);
  c.text = std::move(text);
  c.backend_id = id();
  return c;
}

std::string MockBackend::id() const { return mode_ == MockMode::Script ? "mock-script" : "mock-map"; }

std::size_t MockBackend::remaining() const {
  std::lock_guard lock(mu_);
  return mode_ == MockMode::Script ? queue_.size() : table_.size();
}

std::vector<ChatRequest> MockBackend::received() const {
  std::lock_guard lock(mu_);
  return received_;
}

Completion FunctionBackend::complete(const ChatRequest& request) {
  Completion c;
  c.text = responder_(request);
  c.usage = synthesize_usage(request, c.text);
  c.backend_id = id_;
  return c;
}

Completion RecordingBackend::complete(const ChatRequest& request) {
  Completion c = inner_.complete(request);
  std::lock_guard lock(mu_);
  log_.push_back({request, c.text});
  return c;
}

std::vector<RecordingBackend::Exchange> RecordingBackend::exchanges() const {
  std::lock_guard lock(mu_);
  return log_;
}

// ---------------------------------------------------------------------------

double cost_projection(CostKind kind, std::int64_t p_size, const PriceTable& table) {
  if (p_size < 0) throw Error(ErrorCode::InvalidArgument, "profiling size must be non-negative");
  const auto p = static_cast<double>(p_size);
  switch (kind) {
    case CostKind::IterativeSheet:
      return table.sheet_cost_per_sample * p;
    case CostKind::Summary:
      return table.summary_quadratic_coeff * p * p + table.summary_linear_coeff * p;
  }
  return 0.0;
}

double usage_cost(const Usage& usage, const PriceTable& table) {
  return static_cast<double>(usage.prompt_tokens) / 1e6 * table.input_per_1m +
         static_cast<double>(usage.completion_tokens) / 1e6 * table.output_per_1m;
}

std::int64_t cost_crossover(const PriceTable& table) {
  auto summary_exceeds = [&](std::int64_t p) {
    return cost_projection(CostKind::Summary, p, table) > cost_projection(CostKind::IterativeSheet, p, table);
  };
  const double q = table.summary_quadratic_coeff;
  const double gap = table.sheet_cost_per_sample - table.summary_linear_coeff;
  if (q <= 0.0) {
    if (gap < 0.0) return 1;
    throw Error(ErrorCode::InvalidArgument, "summary cost never exceeds sheet cost for this price table");
  }
  // For p > 0: q p^2 + l p > s p  <=>  p > (s - l) / q.
  auto p = static_cast<std::int64_t>(std::floor(std::max(0.0, gap / q))) + 1;
  while (p > 1 && summary_exceeds(p - 1)) --p;
  while (!summary_exceeds(p)) ++p;
  return p;
}

}  // namespace storygen
