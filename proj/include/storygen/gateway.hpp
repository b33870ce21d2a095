#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace storygen {

/// Which pipeline step a request belongs to. Used for sampling defaults,
/// fingerprints and per-role call accounting.
enum class Role { Avg, Sheet, Combine, Summary, Persona, Rule, StoryGen, Judge, Enrich };

inline constexpr std::array<Role, 9> kAllRoles = {Role::Avg,     Role::Sheet, Role::Combine,
                                                  Role::Summary, Role::Persona, Role::Rule,
                                                  Role::StoryGen, Role::Judge, Role::Enrich};

std::string_view role_name(Role role);

struct SamplingConfig {
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 4096;

  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

/// temperature 0 / 4096 tokens for analysis roles; 0.7 / top_p 0.95 for
/// story generation.
SamplingConfig default_sampling(Role role);

struct FewShotTurn {
  std::string user;
  std::string assistant;

  friend bool operator==(const FewShotTurn&, const FewShotTurn&) = default;
};

struct ChatRequest {
  Role role = Role::Avg;
  std::string system;
  std::vector<FewShotTurn> few_shot;
  std::string user;
  SamplingConfig sampling;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

ChatRequest make_request(Role role, std::string system, std::string user,
                         std::vector<FewShotTurn> few_shot = {});

/// Throws Error{InvalidRequest} on empty system/user or incomplete turns.
void validate_request(const ChatRequest& request);

/// SHA-256 (hex) over a canonical JSON encoding of the request.
std::string fingerprint(const ChatRequest& request);

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  Usage& operator+=(const Usage& o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  friend bool operator==(const Usage&, const Usage&) = default;
};

struct Completion {
  std::string text;
  Usage usage;
  std::string backend_id;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// Validates, forwards to the backend, and keeps call/usage tallies.
/// Safe to share between threads.
class Gateway {
 public:
  explicit Gateway(Backend& backend) : backend_(backend) {}

  Completion complete(const ChatRequest& request);

  std::size_t calls() const;
  std::size_t calls(Role role) const;
  Usage usage() const;
  void reset_counters();

  Backend& backend() { return backend_; }

 private:
  Backend& backend_;
  mutable std::mutex mu_;
  std::array<std::size_t, kAllRoles.size()> per_role_{};
  Usage usage_;
};

Completion complete(const ChatRequest& request, Backend& backend);

// ---------------------------------------------------------------------------
// Mock backend

enum class MockMode { Script, Map };

/// Offline backend. Script mode pops responses in order; map mode looks up
/// the request fingerprint. Usage is synthesized as whitespace token counts.
class MockBackend : public Backend {
 public:
  static MockBackend script(std::vector<std::string> responses);
  static MockBackend map(std::map<std::string, std::string> responses);
  /// Reads {"mode":"script","responses":[...]} or
  /// {"mode":"map","responses":{fingerprint: text}}.
  static MockBackend from_file(const std::filesystem::path& path);
  static MockBackend from_json(std::string_view json);

  MockBackend(const MockBackend& other);
  MockBackend& operator=(const MockBackend&) = delete;

  Completion complete(const ChatRequest& request) override;
  std::string id() const override;

  MockMode mode() const { return mode_; }
  std::size_t remaining() const;
  /// Every request seen, in arrival order.
  std::vector<ChatRequest> received() const;

 private:
  MockBackend(MockMode mode, std::deque<std::string> queue, std::map<std::string, std::string> table);

  MockMode mode_;
  mutable std::mutex mu_;
  std::deque<std::string> queue_;
  std::map<std::string, std::string> table_;
  std::vector<ChatRequest> received_;
};

/// Backend whose response is computed from the request; handy in tests and
/// as the engine behind the fixture generator.
class FunctionBackend : public Backend {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;
  FunctionBackend(std::string id, Responder responder)
      : id_(std::move(id)), responder_(std::move(responder)) {}

  Completion complete(const ChatRequest& request) override;
  std::string id() const override { return id_; }

 private:
  std::string id_;
  Responder responder_;
};

/// Records every (request, response) pair flowing through a wrapped backend.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}

  Completion complete(const ChatRequest& request) override;
  std::string id() const override { return inner_.id(); }

  struct Exchange {
    ChatRequest request;
    std::string response;
  };
  std::vector<Exchange> exchanges() const;

 private:
  Backend& inner_;
  mutable std::mutex mu_;
  std::vector<Exchange> log_;
};

Usage synthesize_usage(const ChatRequest& request, std::string_view response);

// ---------------------------------------------------------------------------
// Cost accounting

struct PriceTable {
  double input_per_1m = 2.50;
  double output_per_1m = 10.00;
  double sheet_cost_per_sample = 0.06;
  double summary_cost_per_sample = 0.02;
  double summary_quadratic_coeff = 0.0015;
  double summary_linear_coeff = 0.019;
};

enum class CostKind { IterativeSheet, Summary };

/// Cumulative cost when one story is added per step up to p_size stories:
/// linear for the iterative sheet, quadratic for the re-built summary.
double cost_projection(CostKind kind, std::int64_t p_size, const PriceTable& table = {});

double usage_cost(const Usage& usage, const PriceTable& table = {});

/// Smallest integer profiling size where the summary costs strictly more
/// than the iterative sheet.
std::int64_t cost_crossover(const PriceTable& table = {});

}  // namespace storygen
