#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scenewatch/error.hpp"
#include "scenewatch/verdict.hpp"

namespace scenewatch {

struct RequestParams {
  double temperature = 0.0;
  int max_tokens = 1024;
  double timeout_s = 60.0;
  int retry_budget = 3;
  double backoff_initial_s = 0.5;
  double backoff_max_s = 8.0;

  bool operator==(const RequestParams&) const = default;
};

struct ModelEndpoint {
  std::string model_id;     // name used in reports
  std::string base_url;     // e.g. https://api.together.xyz/v1
  std::string api_model;    // model name sent on the wire; defaults to model_id
  std::string api_key_env;  // environment variable holding the bearer token
  RequestParams params;

  const std::string& wire_model() const noexcept { return api_model.empty() ? model_id : api_model; }

  bool operator==(const ModelEndpoint&) const = default;
};

nlohmann::json to_json(const ModelEndpoint& endpoint);
ModelEndpoint endpoint_from_json(const nlohmann::json& j, const RequestParams& defaults = {});

/// Throws Error{InvalidEndpoint}: empty list, duplicate model ids,
/// non-positive timeout, negative retry budget.
void validate_endpoints(std::span<const ModelEndpoint> endpoints);

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// One chat-completions POST. Implementations throw Error{Timeout} or
/// Error{TransportFailure} when no HTTP response arrived, and must be safe to
/// call from several threads.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResponse post(const ModelEndpoint& endpoint, const std::string& body) = 0;
};

/// cpp-httplib backed transport; posts to `<base_url>/chat/completions`.
class HttpChatTransport final : public ChatTransport {
 public:
  HttpResponse post(const ModelEndpoint& endpoint, const std::string& body) override;
};

/// Request body in the de-facto chat-completions shape.
std::string build_chat_request(const ModelEndpoint& endpoint, std::string_view prompt);
/// choices[0].message.content of a completion. Throws Error{InvalidResponse}.
std::string extract_message_text(std::string_view body);

class HttpRejected : public Error {
 public:
  HttpRejected(int status, std::string body)
      : Error(ErrorCode::Rejected, "HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}
  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;
void real_sleep(std::chrono::duration<double> d);

struct QueryResult {
  std::string text;
  int retries = 0;
};

/// Sends the prompt, retrying transport failures, timeouts, 429 and 5xx with
/// exponential backoff until the endpoint's retry budget is spent. Other
/// 4xx responses are never retried (HttpRejected).
QueryResult query_model(const ModelEndpoint& endpoint, std::string_view prompt,
                        ChatTransport& transport, const Sleeper& sleep = real_sleep);

/// Raw-response cache keyed by (model id, prompt, request params).
class ResponseCache {
 public:
  virtual ~ResponseCache() = default;
  virtual std::optional<std::string> get(const std::string& key) = 0;
  virtual void put(const std::string& key, const std::string& raw_text) = 0;

  static std::string key(const ModelEndpoint& endpoint, std::string_view prompt);
};

class MemoryResponseCache final : public ResponseCache {
 public:
  std::optional<std::string> get(const std::string& key) override;
  void put(const std::string& key, const std::string& raw_text) override;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;
};

/// One file per entry under `dir` (created on demand).
class DirectoryResponseCache final : public ResponseCache {
 public:
  explicit DirectoryResponseCache(std::filesystem::path dir);
  std::optional<std::string> get(const std::string& key) override;
  void put(const std::string& key, const std::string& raw_text) override;

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
};

struct EndpointError {
  ErrorCode code = ErrorCode::TransportFailure;
  std::string message;
  std::optional<int> http_status;
  std::optional<std::string> raw_text;  // present when the model answered but parsing failed

  bool operator==(const EndpointError&) const = default;
};

nlohmann::json to_json(const EndpointError& error);
EndpointError endpoint_error_from_json(const nlohmann::json& j);

struct EndpointOutcome {
  std::string model_id;
  std::optional<LlmVerdict> verdict;
  std::optional<EndpointError> error;
  int retries = 0;
  bool from_cache = false;

  bool ok() const noexcept { return verdict.has_value(); }
};

class AllEndpointsFailed : public Error {
 public:
  explicit AllEndpointsFailed(std::vector<EndpointOutcome> outcomes);
  const std::vector<EndpointOutcome>& outcomes() const noexcept { return outcomes_; }

 private:
  std::vector<EndpointOutcome> outcomes_;
};

struct FanOutOptions {
  std::size_t max_in_flight = 4;
  ResponseCache* cache = nullptr;
  Sleeper sleep = real_sleep;
};

/// Queries every endpoint concurrently (at most `max_in_flight` at once) and
/// returns one outcome per endpoint in configured order. Per-endpoint
/// failures become error records; throws AllEndpointsFailed only when no
/// endpoint produced a verdict.
std::vector<EndpointOutcome> fan_out(std::span<const ModelEndpoint> endpoints,
                                     std::string_view prompt, ChatTransport& transport,
                                     const FanOutOptions& options = {});

}  // namespace scenewatch
