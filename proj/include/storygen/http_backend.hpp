#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>

#include "storygen/gateway.hpp"

namespace storygen {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

struct EndpointUrl {
  std::string scheme_host_port;  // "https://api.example.com:443"
  std::string path;              // "/v1/chat/completions"
};

/// Splits "https://host[:port]/path". Throws Error{InvalidArgument}.
EndpointUrl parse_endpoint(const std::string& url);

/// OpenAI-compatible chat-completions client. Retries transport failures
/// and 429/5xx responses with exponential backoff.
class HttpBackend : public Backend {
 public:
  struct Options {
    std::string url;
    std::string api_key;
    std::string model;
    RetryPolicy retry;
    std::chrono::seconds timeout{300};
    /// Replaceable for tests.
    std::function<void(std::chrono::milliseconds)> sleep;
  };

  explicit HttpBackend(Options options);

  /// Reads GATEWAY_URL and GATEWAY_KEY; returns nullopt when GATEWAY_URL is unset.
  static std::optional<Options> options_from_env(const std::string& model);

  Completion complete(const ChatRequest& request) override;
  std::string id() const override;

  /// Request body as sent over the wire.
  static std::string encode_body(const ChatRequest& request, const std::string& model);
  static Completion decode_body(const std::string& body, const std::string& backend_id);

 private:
  Options options_;
  EndpointUrl endpoint_;
};

}  // namespace storygen
