#include "storygen/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "storygen/error.hpp"

namespace storygen {

using json = nlohmann::json;

EndpointUrl parse_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint URL lacks a scheme: " + url);
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidArgument, "unsupported URL scheme: " + scheme);
  }
  auto path_start = url.find('/', scheme_end + 3);
  EndpointUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.scheme_host_port.size() == scheme_end + 3) throw Error(ErrorCode::InvalidArgument, "endpoint URL has no host");
  return out;
}

HttpBackend::HttpBackend(Options options) : options_(std::move(options)), endpoint_(parse_endpoint(options_.url)) {
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
}

std::optional<HttpBackend::Options> HttpBackend::options_from_env(const std::string& model) {
  const char* url = std::getenv("GATEWAY_URL");
  if (url == nullptr || *url == '\0') return std::nullopt;
  const char* key = std::getenv("GATEWAY_KEY");
  Options o;
  o.url = url;
  o.api_key = key ? key : "";
  o.model = model;
  return o;
}

std::string HttpBackend::id() const { return "http:" + options_.model; }

std::string HttpBackend::encode_body(const ChatRequest& request, const std::string& model) {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", request.system}});
  for (const auto& turn : request.few_shot) {
    messages.push_back({{"role", "user"}, {"content", turn.user}});
    messages.push_back({{"role", "assistant"}, {"content", turn.assistant}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user}});
  json body = {
      {"model", model},
      {"messages", messages},
      {"temperature", request.sampling.temperature},
      {"top_p", request.sampling.top_p},
      {"max_tokens", request.sampling.max_tokens},
  };
  return body.dump();
}

Completion HttpBackend::decode_body(const std::string& body, const std::string& backend_id) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderError, std::string("response is not JSON: ") + e.what());
  }
  Completion c;
  c.backend_id = backend_id;
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    c.text = content.is_null() ? std::string() : content.get<std::string>();
    if (doc.contains("usage") && doc["usage"].is_object()) {
      c.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
      c.usage.completion_tokens = doc["usage"].value("completion_tokens", 0);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderError, std::string("unexpected response shape: ") + e.what());
  }
  if (c.usage.prompt_tokens < 0 || c.usage.completion_tokens < 0) {
    throw Error(ErrorCode::ProviderError, "negative usage in response");
  }
  return c;
}

namespace {
bool retryable_status(int status) { return status == 429 || status >= 500; }
}  // namespace

Completion HttpBackend::complete(const ChatRequest& request) {
  const std::string body = encode_body(request, options_.model);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  auto backoff = options_.retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    httplib::Client client(endpoint_.scheme_host_port);
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);

    auto res = client.Post(endpoint_.path, headers, body, "application/json");
    const bool last = attempt >= options_.retry.max_attempts;
    if (!res) {
      auto msg = "transport failure: " + httplib::to_string(res.error());
      if (last) throw Error(ErrorCode::NetworkError, msg + " (after " + std::to_string(attempt) + " attempts)");
      spdlog::warn("gateway attempt {} failed ({}); retrying in {} ms", attempt, msg, backoff.count());
    } else if (res->status >= 200 && res->status < 300) {
      return decode_body(res->body, id());
    } else if (!retryable_status(res->status) || last) {
      throw Error(ErrorCode::ProviderError, "HTTP " + std::to_string(res->status) + ": " + res->body);
    } else {
      spdlog::warn("gateway attempt {} got HTTP {}; retrying in {} ms", attempt, res->status, backoff.count());
    }
    options_.sleep(backoff);
    backoff *= 2;
  }
}

}  // namespace storygen
