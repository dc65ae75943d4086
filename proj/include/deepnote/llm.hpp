#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepnote/error.hpp"

namespace deepnote {

struct SamplingConfig {
  double temperature = 0.1;
  double top_p = 1.0;
  int max_tokens = 1024;

  void validate() const;

  /// temperature x top_p over {0.1, 0.5, 0.9}^2, temperature-major.
  static std::vector<SamplingConfig> data_construction_grid();

  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

struct ChatRequest {
  std::string user_prompt;
  SamplingConfig sampling;
  std::string model;
};

enum class BackendErrorKind { Timeout, RateLimit, Protocol, Content, Transport, ScriptExhausted };

std::string_view to_string(BackendErrorKind kind);

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& message, int status = 0)
      : Error(message), kind_(kind), status_(status) {}

  BackendErrorKind kind() const noexcept { return kind_; }
  /// Last HTTP status seen, 0 when none.
  int status() const noexcept { return status_; }

 private:
  BackendErrorKind kind_;
  int status_;
};

/// A chat model. Implementations return the assistant text or throw
/// BackendError, and must tolerate concurrent calls.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Token bucket in requests per minute. Bursts are capped at one second's
/// worth of requests (at least one).
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  std::mutex mutex_;
  double rate_per_second_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct HttpEndpointConfig {
  std::string base_url = "https://api.openai.com";
  std::string api_key_env = "DEEPNOTE_API_KEY";
  std::optional<std::string> api_key;  // overrides the environment when set
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  double requests_per_minute = 0.0;  // 0 disables rate limiting

  std::string resolve_api_key() const;
};

/// One chat-completion call with bounded retries on timeouts, 429 and 5xx.
std::string http_complete(const HttpEndpointConfig& config, const ChatRequest& request);

class HttpBackend : public GenerationBackend {
 public:
  explicit HttpBackend(HttpEndpointConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  HttpEndpointConfig config_;
  std::optional<RateLimiter> limiter_;
};

/// Canned responses for tests and offline runs.
///
/// Rules are checked in insertion order; the first rule whose substring occurs
/// in the prompt owns the call, and an exhausted owning rule is an error rather
/// than a fall-through. Prompts matching no rule draw from the default queue.
class ScriptedBackend : public GenerationBackend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<std::string> responses);

  void push(std::string response);
  void add_rule(std::string match, std::vector<std::string> responses);

  std::string complete(const ChatRequest& request) override;

  /// Prompts in the order they were consumed.
  std::vector<std::string> consumed_prompts() const;
  std::size_t remaining() const;

  /// Appends a line-delimited script of {"response": "..."} or
  /// {"match": "...", "response": "..."} records.
  void load_script(const std::filesystem::path& path);

 private:
  struct Rule {
    std::string match;
    std::deque<std::string> responses;
  };

  mutable std::mutex mutex_;
  std::vector<Rule> rules_;
  std::deque<std::string> default_queue_;
  std::vector<std::string> consumed_;
};

std::string scripted_complete(ScriptedBackend& backend, const ChatRequest& request);

}  // namespace deepnote
