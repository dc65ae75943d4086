#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "deepnote/llm.hpp"
#include "http_client.hpp"

namespace deepnote {
namespace detail {

Endpoint resolve_endpoint(const std::string& base_url, const std::string& endpoint) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base URL needs a scheme: " + base_url);
  auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint out;
  out.origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (prefix.size() < 3 || prefix.compare(prefix.size() - 3, 3, "/v1") != 0) prefix += "/v1";
  out.path = prefix + "/" + endpoint;
  return out;
}

HttpResult post_json(const Endpoint& endpoint, const std::string& bearer_token, const std::string& body,
                     std::chrono::milliseconds timeout) {
  HttpResult out;
  httplib::Client client(endpoint.origin);
  if (!client.is_valid()) {
    out.error = "unsupported endpoint " + endpoint.origin;
    return out;
  }
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
  auto res = client.Post(endpoint.path, headers, body, "application/json");
  if (!res) {
    auto err = res.error();
    out.error = httplib::to_string(err);
    out.timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

}  // namespace detail

std::string HttpEndpointConfig::resolve_api_key() const {
  if (api_key) return *api_key;
  if (const char* value = std::getenv(api_key_env.c_str())) return value;
  return {};
}

namespace {

bool is_transient_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

std::string extract_choice_text(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendError(BackendErrorKind::Protocol, std::string("response is not JSON: ") + e.what(), 200);
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw BackendError(BackendErrorKind::Protocol, "response has no choices", 200);
  }
  const auto& first = choices->front();
  if (first.value("finish_reason", "") == "content_filter") {
    throw BackendError(BackendErrorKind::Content, "completion blocked by content filter", 200);
  }
  const auto message = first.find("message");
  if (message == first.end() || !message->is_object()) {
    throw BackendError(BackendErrorKind::Protocol, "first choice has no message", 200);
  }
  const auto content = message->find("content");
  if (content == message->end() || content->is_null()) {
    throw BackendError(BackendErrorKind::Content, "first choice has no content", 200);
  }
  if (!content->is_string()) throw BackendError(BackendErrorKind::Protocol, "message content is not a string", 200);
  return content->get<std::string>();
}

}  // namespace

std::string http_complete(const HttpEndpointConfig& config, const ChatRequest& request) {
  if (request.user_prompt.empty()) throw ConfigError("chat request has an empty prompt");
  request.sampling.validate();
  if (config.max_retries < 0) throw ConfigError("max_retries must be >= 0");

  nlohmann::json body = {
      {"model", request.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.user_prompt}}})},
      {"temperature", request.sampling.temperature},
      {"top_p", request.sampling.top_p},
      {"max_tokens", request.sampling.max_tokens},
  };
  const std::string payload = body.dump();
  const auto endpoint = detail::resolve_endpoint(config.base_url, "chat/completions");
  const std::string key = config.resolve_api_key();

  auto backoff = config.initial_backoff;
  int last_status = 0;
  std::string last_reason;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * config.backoff_multiplier));
    }
    auto res = detail::post_json(endpoint, key, payload, config.timeout);
    if (res.status == 0) {
      last_reason = res.timed_out ? "timeout (" + res.error + ")" : "transport failure (" + res.error + ")";
      continue;
    }
    last_status = res.status;
    if (res.status == 200) return extract_choice_text(res.body);
    if (is_transient_status(res.status)) {
      last_reason = "HTTP " + std::to_string(res.status);
      continue;
    }
    throw BackendError(BackendErrorKind::Protocol,
                       "HTTP " + std::to_string(res.status) + " from " + endpoint.origin + ": " +
                           res.body.substr(0, 512),
                       res.status);
  }
  throw BackendError(BackendErrorKind::Transport,
                     "retries exhausted after " + std::to_string(config.max_retries + 1) +
                         " attempts; last failure: " + last_reason,
                     last_status);
}

HttpBackend::HttpBackend(HttpEndpointConfig config) : config_(std::move(config)) {
  if (config_.requests_per_minute > 0.0) limiter_.emplace(config_.requests_per_minute);
}

std::string HttpBackend::complete(const ChatRequest& request) {
  if (limiter_) limiter_->acquire();
  return http_complete(config_, request);
}

}  // namespace deepnote
