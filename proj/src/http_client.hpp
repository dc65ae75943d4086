#pragma once

#include <chrono>
#include <string>

namespace deepnote::detail {

struct HttpResult {
  int status = 0;        // 0 when no HTTP response arrived
  std::string body;
  std::string error;     // transport failure description when status == 0
  bool timed_out = false;
};

/// Splits "scheme://host[:port][/prefix]" and appends `/v1/<endpoint>` unless
/// the prefix already ends in /v1.
struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};
Endpoint resolve_endpoint(const std::string& base_url, const std::string& endpoint);

HttpResult post_json(const Endpoint& endpoint, const std::string& bearer_token, const std::string& body,
                     std::chrono::milliseconds timeout);

}  // namespace deepnote::detail
