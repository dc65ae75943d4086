#include "deepnote/llm.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace deepnote {

void SamplingConfig::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

std::vector<SamplingConfig> SamplingConfig::data_construction_grid() {
  static constexpr double kValues[] = {0.1, 0.5, 0.9};
  std::vector<SamplingConfig> grid;
  for (double t : kValues) {
    for (double p : kValues) grid.push_back(SamplingConfig{t, p, 1024});
  }
  return grid;
}

std::string_view to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::Timeout:
      return "timeout";
    case BackendErrorKind::RateLimit:
      return "rate-limit";
    case BackendErrorKind::Protocol:
      return "protocol";
    case BackendErrorKind::Content:
      return "content";
    case BackendErrorKind::Transport:
      return "transport";
    case BackendErrorKind::ScriptExhausted:
      return "script-exhausted";
  }
  return "unknown";
}

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {
  if (!(requests_per_minute > 0.0)) throw ConfigError("rate limit must be positive");
}

void RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  for (;;) {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_second_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_second_);
    // Sleeping under the lock keeps waiters FIFO-ish and the bucket consistent.
    std::this_thread::sleep_for(wait);
  }
}

}  // namespace deepnote
