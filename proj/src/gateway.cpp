#include "scenewatch/gateway.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <semaphore>
#include <set>
#include <thread>

#include "scenewatch/util.hpp"

namespace scenewatch {

nlohmann::json to_json(const ModelEndpoint& endpoint) {
  const auto& p = endpoint.params;
  return {{"model_id", endpoint.model_id},
          {"base_url", endpoint.base_url},
          {"api_model", endpoint.wire_model()},
          {"api_key_env", endpoint.api_key_env},
          {"temperature", p.temperature},
          {"max_tokens", p.max_tokens},
          {"timeout_s", p.timeout_s},
          {"retry_budget", p.retry_budget},
          {"backoff_initial_s", p.backoff_initial_s},
          {"backoff_max_s", p.backoff_max_s}};
}

ModelEndpoint endpoint_from_json(const nlohmann::json& j, const RequestParams& defaults) {
  try {
    ModelEndpoint e;
    e.model_id = j.at("model_id").get<std::string>();
    e.base_url = j.value("base_url", std::string{});
    e.api_model = j.value("api_model", std::string{});
    e.api_key_env = j.value("api_key_env", std::string{});
    e.params.temperature = j.value("temperature", defaults.temperature);
    e.params.max_tokens = j.value("max_tokens", defaults.max_tokens);
    e.params.timeout_s = j.value("timeout_s", defaults.timeout_s);
    e.params.retry_budget = j.value("retry_budget", defaults.retry_budget);
    e.params.backoff_initial_s = j.value("backoff_initial_s", defaults.backoff_initial_s);
    e.params.backoff_max_s = j.value("backoff_max_s", defaults.backoff_max_s);
    return e;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidEndpoint, std::string("endpoint record: ") + e.what());
  }
}

void validate_endpoints(std::span<const ModelEndpoint> endpoints) {
  if (endpoints.empty()) throw Error(ErrorCode::InvalidEndpoint, "no endpoints configured");
  std::set<std::string> ids;
  for (const auto& e : endpoints) {
    if (e.model_id.empty()) throw Error(ErrorCode::InvalidEndpoint, "empty model_id");
    if (!ids.insert(e.model_id).second) {
      throw Error(ErrorCode::InvalidEndpoint, "duplicate model_id '" + e.model_id + "'");
    }
    if (!(e.params.timeout_s > 0.0)) {
      throw Error(ErrorCode::InvalidEndpoint, "'" + e.model_id + "': timeout must be positive");
    }
    if (e.params.retry_budget < 0) {
      throw Error(ErrorCode::InvalidEndpoint, "'" + e.model_id + "': negative retry budget");
    }
  }
}

// ---------------------------------------------------------------------------
// HTTP transport

namespace {

struct SplitUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  auto prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

std::chrono::microseconds to_micros(double seconds) {
  return std::chrono::microseconds(static_cast<long long>(seconds * 1e6));
}

}  // namespace

HttpResponse HttpChatTransport::post(const ModelEndpoint& endpoint, const std::string& body) {
  const auto [origin, prefix] = split_url(endpoint.base_url);
  httplib::Client client(origin);
  client.set_connection_timeout(to_micros(endpoint.params.timeout_s));
  client.set_read_timeout(to_micros(endpoint.params.timeout_s));
  client.set_write_timeout(to_micros(endpoint.params.timeout_s));

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  auto result = client.Post(prefix + "/chat/completions", headers, body, "application/json");
  if (!result) {
    const auto err = result.error();
    const auto what = httplib::to_string(err);
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      // httplib reports an expired read timeout as a read error.
      throw Error(ErrorCode::Timeout, endpoint.model_id + ": " + what);
    }
    throw Error(ErrorCode::TransportFailure, endpoint.model_id + ": " + what);
  }
  return HttpResponse{result->status, result->body};
}

std::string build_chat_request(const ModelEndpoint& endpoint, std::string_view prompt) {
  nlohmann::json body{
      {"model", endpoint.wire_model()},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
      {"temperature", endpoint.params.temperature},
      {"max_tokens", endpoint.params.max_tokens},
      {"stream", false},
  };
  return body.dump();
}

std::string extract_message_text(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidResponse, std::string("completion body: ") + e.what());
  }
}

void real_sleep(std::chrono::duration<double> d) {
  std::this_thread::sleep_for(d);
}

QueryResult query_model(const ModelEndpoint& endpoint, std::string_view prompt,
                        ChatTransport& transport, const Sleeper& sleep) {
  const auto body = build_chat_request(endpoint, prompt);
  const int budget = std::max(0, endpoint.params.retry_budget);

  QueryResult result;
  for (int attempt = 0;; ++attempt) {
    const bool can_retry = attempt < budget;
    const auto backoff = [&] {
      const double delay = std::min(endpoint.params.backoff_max_s,
                                    endpoint.params.backoff_initial_s * std::pow(2.0, attempt));
      sleep(std::chrono::duration<double>(delay));
      ++result.retries;
    };

    HttpResponse response;
    try {
      response = transport.post(endpoint, body);
    } catch (const Error& e) {
      if ((e.code() == ErrorCode::Timeout || e.code() == ErrorCode::TransportFailure) && can_retry) {
        backoff();
        continue;
      }
      if (e.code() == ErrorCode::Timeout || e.code() == ErrorCode::TransportFailure) {
        throw Error(e.code(), e.detail() + " (after " + std::to_string(result.retries) + " retries)");
      }
      throw;
    }

    if (response.status >= 200 && response.status < 300) {
      result.text = extract_message_text(response.body);
      return result;
    }
    const bool transient = response.status == 429 || response.status >= 500;
    if (!transient) throw HttpRejected(response.status, response.body);
    if (!can_retry) {
      throw Error(ErrorCode::TransportFailure,
                  endpoint.model_id + ": HTTP " + std::to_string(response.status) + " after " +
                      std::to_string(result.retries) + " retries");
    }
    backoff();
  }
}

// ---------------------------------------------------------------------------
// caching

std::string ResponseCache::key(const ModelEndpoint& endpoint, std::string_view prompt) {
  const auto& p = endpoint.params;
  const nlohmann::json params{{"temperature", p.temperature}, {"max_tokens", p.max_tokens},
                              {"api_model", endpoint.wire_model()}};
  std::string material = endpoint.model_id;
  material.push_back('\0');
  material += prompt;
  material.push_back('\0');
  material += params.dump();
  return sha256_hex(material);
}

std::optional<std::string> MemoryResponseCache::get(const std::string& key) {
  std::lock_guard lock(mutex_);
  if (const auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

void MemoryResponseCache::put(const std::string& key, const std::string& raw_text) {
  std::lock_guard lock(mutex_);
  entries_[key] = raw_text;
}

std::size_t MemoryResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

DirectoryResponseCache::DirectoryResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<std::string> DirectoryResponseCache::get(const std::string& key) {
  std::lock_guard lock(mutex_);
  const auto path = dir_ / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    return nlohmann::json::parse(read_file(path)).at("raw_text").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are treated as misses
  }
}

void DirectoryResponseCache::put(const std::string& key, const std::string& raw_text) {
  std::lock_guard lock(mutex_);
  const auto path = dir_ / (key + ".json");
  const auto tmp = dir_ / (key + ".json.tmp");
  write_file(tmp, nlohmann::json{{"key", key}, {"raw_text", raw_text}}.dump());
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// fan-out

nlohmann::json to_json(const EndpointError& error) {
  nlohmann::json j{{"code", std::string(to_string(error.code))}, {"message", error.message}};
  j["http_status"] = error.http_status ? nlohmann::json(*error.http_status) : nlohmann::json(nullptr);
  j["raw_text"] = error.raw_text ? nlohmann::json(*error.raw_text) : nlohmann::json(nullptr);
  return j;
}

namespace {

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::Io); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace

EndpointError endpoint_error_from_json(const nlohmann::json& j) {
  try {
    EndpointError e;
    const auto code = error_code_from_string(j.at("code").get<std::string>());
    if (!code) throw Error(ErrorCode::MalformedDocument, "unknown error code");
    e.code = *code;
    e.message = j.at("message").get<std::string>();
    if (!j.at("http_status").is_null()) e.http_status = j.at("http_status").get<int>();
    if (!j.at("raw_text").is_null()) e.raw_text = j.at("raw_text").get<std::string>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::MalformedDocument, std::string("error record: ") + ex.what());
  }
}

AllEndpointsFailed::AllEndpointsFailed(std::vector<EndpointOutcome> outcomes)
    : Error(ErrorCode::AllEndpointsFailed, [&] {
        std::string msg = std::to_string(outcomes.size()) + " endpoint(s) failed:";
        for (const auto& o : outcomes) {
          msg += " [" + o.model_id + ": " + (o.error ? o.error->message : "?") + "]";
        }
        return msg;
      }()),
      outcomes_(std::move(outcomes)) {}

namespace {

EndpointOutcome query_one(const ModelEndpoint& endpoint, std::string_view prompt,
                          ChatTransport& transport, const FanOutOptions& options) {
  EndpointOutcome outcome;
  outcome.model_id = endpoint.model_id;

  std::string text;
  try {
    std::optional<std::string> cached;
    std::string key;
    if (options.cache != nullptr) {
      key = ResponseCache::key(endpoint, prompt);
      cached = options.cache->get(key);
    }
    if (cached) {
      text = std::move(*cached);
      outcome.from_cache = true;
    } else {
      auto result = query_model(endpoint, prompt, transport, options.sleep);
      outcome.retries = result.retries;
      text = std::move(result.text);
      if (options.cache != nullptr) options.cache->put(key, text);
    }
  } catch (const HttpRejected& e) {
    outcome.error = EndpointError{e.code(), e.detail(), e.status(), std::nullopt};
    return outcome;
  } catch (const Error& e) {
    outcome.error = EndpointError{e.code(), e.detail(), std::nullopt, std::nullopt};
    return outcome;
  } catch (const std::exception& e) {
    outcome.error = EndpointError{ErrorCode::TransportFailure, e.what(), std::nullopt, std::nullopt};
    return outcome;
  }

  try {
    outcome.verdict = parse_verdict(endpoint.model_id, text);
  } catch (const Error& e) {
    outcome.error = EndpointError{e.code(), e.detail(), std::nullopt, text};
  }
  return outcome;
}

}  // namespace

std::vector<EndpointOutcome> fan_out(std::span<const ModelEndpoint> endpoints,
                                     std::string_view prompt, ChatTransport& transport,
                                     const FanOutOptions& options) {
  validate_endpoints(endpoints);
  const auto bound = static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options.max_in_flight));

  std::vector<EndpointOutcome> outcomes(endpoints.size());
  {
    std::counting_semaphore<> slots(bound);
    std::vector<std::jthread> workers;
    workers.reserve(endpoints.size());
    for (std::size_t i = 0; i < endpoints.size(); ++i) {
      workers.emplace_back([&, i] {
        slots.acquire();
        outcomes[i] = query_one(endpoints[i], prompt, transport, options);
        slots.release();
      });
    }
  }  // jthreads join here

  const bool any_ok = std::any_of(outcomes.begin(), outcomes.end(),
                                  [](const EndpointOutcome& o) { return o.ok(); });
  if (!any_ok) throw AllEndpointsFailed(std::move(outcomes));
  return outcomes;
}

}  // namespace scenewatch
