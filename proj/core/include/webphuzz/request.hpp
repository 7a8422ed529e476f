#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "webphuzz/model.hpp"

namespace webphuzz::http {

inline constexpr std::string_view kFeedbackHeader = "X-Fuzzer-Covid";
inline constexpr std::size_t kMaxBodyBytes = 1024 * 1024;

enum class BodyEncoding { none, urlencoded, json };

struct PreparedRequest {
  HttpMethod method = HttpMethod::GET;
  std::string url;     // absolute, query string included
  std::string target;  // origin-form request target: path[?query]
  std::vector<std::pair<std::string, std::string>> headers;
  std::optional<std::string> body;
  BodyEncoding body_encoding = BodyEncoding::none;

  std::optional<std::string> header(std::string_view name) const;
};

// Pure function of the candidate. Throws InvalidHeaderValue when a header or
// cookie value contains CR, LF or NUL.
PreparedRequest prepare_request(const Candidate& c);

// Renders the request as HTTP/1.1 wire text (for logs and replay files).
std::string to_wire(const PreparedRequest& r);

// Executes prepared requests. Implementations throw TimeoutError or
// ConnectError.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual ResponseSummary execute(const PreparedRequest& r, double timeout_s) = 0;
};

// cpp-httplib backed transport with keep-alive. Redirects are not followed and
// bodies are capped at kMaxBodyBytes. One instance per worker.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::string origin);
  ~HttpTransport() override;

  ResponseSummary execute(const PreparedRequest& r, double timeout_s) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
};

// Retries ConnectError with doubling backoff; rethrows after the last attempt.
// Timeouts are not retried.
ResponseSummary execute_with_retry(Transport& transport, const PreparedRequest& r, double timeout_s,
                                   const RetryPolicy& policy = {});

}  // namespace webphuzz::http
