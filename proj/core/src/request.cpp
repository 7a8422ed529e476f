#include "webphuzz/request.hpp"

#include <algorithm>
#include <cctype>
#include <thread>

#include "httplib.h"
#include "webphuzz/error.hpp"
#include "webphuzz/url.hpp"

namespace webphuzz::http {

namespace {

bool iequals_prefix(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && iequals_prefix(a, b);
}

void require_header_safe(std::string_view name, std::string_view value) {
  if (value.find_first_of(std::string_view("\r\n\0", 3)) != std::string_view::npos)
    throw InvalidHeaderValue(std::string(name));
}

// Cookie values: keep RFC 6265 cookie-octets, percent-encode the rest. '%' is
// encoded as well since PHP url-decodes incoming cookie values.
std::string encode_cookie_value(std::string_view raw) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : raw) {
    bool octet = c == 0x21 || (c >= 0x23 && c <= 0x2B && c != 0x25) || (c >= 0x2D && c <= 0x3A) ||
                 (c >= 0x3C && c <= 0x5B) || (c >= 0x5D && c <= 0x7E);
    if (octet) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

// JSON string literal that passes non-ASCII bytes through untouched.
void append_json_string(std::string& out, std::string_view s) {
  static constexpr char hex[] = "0123456789abcdef";
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20) {
          out += "\\u00";
          out += hex[c >> 4];
          out += hex[c & 0xF];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

// Values at `location` in config order, then runtime-only slots (login
// cookies) in key order.
std::vector<std::pair<std::string, std::string>> ordered_values(const Candidate& c,
                                                                ParamLocation location) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<std::string> seen;
  if (c.endpoint) {
    if (const auto* g = c.endpoint->group(location)) {
      for (const auto& p : g->params) {
        auto it = c.values.find(ParamKey{location, p.name});
        if (it == c.values.end()) continue;
        out.emplace_back(p.name, it->second);
        seen.push_back(p.name);
      }
    }
  }
  for (const auto& [key, value] : c.values) {
    if (key.location != location) continue;
    if (std::find(seen.begin(), seen.end(), key.name) != seen.end()) continue;
    out.emplace_back(key.name, value);
  }
  return out;
}

}  // namespace

std::optional<std::string> PreparedRequest::header(std::string_view name) const {
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) return v;
  }
  return std::nullopt;
}

PreparedRequest prepare_request(const Candidate& c) {
  if (!c.endpoint) throw ConfigError("candidate without endpoint");
  auto url = parse_url(c.endpoint->target_url);
  if (!url) throw ConfigError("bad target url " + c.endpoint->target_url);

  PreparedRequest r;
  r.method = c.method;

  std::string query = url->query;
  auto query_params = ordered_values(c, ParamLocation::query);
  if (!query_params.empty()) {
    if (!query.empty()) query += '&';
    query += encode_form(query_params);
  }
  r.target = url->path + (query.empty() ? "" : "?" + query);
  r.url = url->origin() + r.target;

  for (auto& [name, value] : ordered_values(c, ParamLocation::header)) {
    require_header_safe(name, value);
    r.headers.emplace_back(name, value);
  }

  auto cookies = ordered_values(c, ParamLocation::cookie);
  if (!cookies.empty()) {
    std::string cookie_header;
    for (const auto& [name, value] : cookies) {
      require_header_safe(name, value);
      if (!cookie_header.empty()) cookie_header += "; ";
      cookie_header += name + "=" + encode_cookie_value(value);
    }
    r.headers.emplace_back("Cookie", cookie_header);
  }

  require_header_safe(kFeedbackHeader, c.feedback_id);
  r.headers.emplace_back(std::string(kFeedbackHeader), c.feedback_id);

  auto body_params = ordered_values(c, ParamLocation::body);
  if (method_carries_body(c.method) && !body_params.empty()) {
    auto content_type = r.header("Content-Type");
    if (content_type && iequals_prefix(*content_type, "application/json")) {
      std::string body = "{";
      for (std::size_t i = 0; i < body_params.size(); ++i) {
        if (i) body += ',';
        append_json_string(body, body_params[i].first);
        body += ':';
        append_json_string(body, body_params[i].second);
      }
      body += '}';
      r.body = std::move(body);
      r.body_encoding = BodyEncoding::json;
    } else {
      r.body = encode_form(body_params);
      r.body_encoding = BodyEncoding::urlencoded;
      if (!content_type) r.headers.emplace_back("Content-Type", "application/x-www-form-urlencoded");
    }
  }
  return r;
}

std::string to_wire(const PreparedRequest& r) {
  std::string out;
  out += to_string(r.method);
  out += ' ';
  out += r.target;
  out += " HTTP/1.1\r\n";
  if (auto url = parse_url(r.url)) {
    out += "Host: " + url->host;
    if (!((url->scheme == "http" && url->port == 80) || (url->scheme == "https" && url->port == 443)))
      out += ":" + std::to_string(url->port);
    out += "\r\n";
  }
  for (const auto& [k, v] : r.headers) out += k + ": " + v + "\r\n";
  if (r.body) out += "Content-Length: " + std::to_string(r.body->size()) + "\r\n";
  out += "\r\n";
  if (r.body) out += *r.body;
  return out;
}

struct HttpTransport::Impl {
  explicit Impl(const std::string& origin) : client(origin) {
    client.set_keep_alive(true);
    client.set_follow_location(false);
    client.set_tcp_nodelay(true);
  }
  httplib::Client client;
};

HttpTransport::HttpTransport(std::string origin) : impl_(std::make_unique<Impl>(origin)) {}
HttpTransport::~HttpTransport() = default;

ResponseSummary HttpTransport::execute(const PreparedRequest& r, double timeout_s) {
  auto& client = impl_->client;
  auto timeout = std::chrono::duration<double>(timeout_s);
  auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(usec);
  client.set_read_timeout(usec);
  client.set_write_timeout(usec);

  ResponseSummary summary;
  httplib::Request req;
  req.method = std::string(to_string(r.method));
  req.path = r.target;
  for (const auto& [k, v] : r.headers) req.headers.emplace(k, v);
  if (r.body) req.body = *r.body;
  req.content_receiver = [&summary](const char* data, std::size_t n, uint64_t, uint64_t) {
    std::size_t room = kMaxBodyBytes - std::min(kMaxBodyBytes, summary.body.size());
    if (n > room) summary.truncated = true;
    summary.body.append(data, std::min(n, room));
    return true;  // keep draining so the connection stays reusable
  };

  auto start = std::chrono::steady_clock::now();
  auto result = client.send(req);
  if (!result) {
    auto err = result.error();
    auto elapsed = std::chrono::steady_clock::now() - start;
    // A read/write failure that took (almost) the whole budget is a hung
    // request; anything else means the target is not reachable.
    bool io_error = err == httplib::Error::Read || err == httplib::Error::Write;
    if (io_error && elapsed >= timeout * 0.9) throw TimeoutError(r.url);
    throw ConnectError(httplib::to_string(err) + " (" + r.url + ")");
  }
  summary.status = result->status;
  for (const auto& [k, v] : result->headers) summary.headers.emplace_back(k, v);
  return summary;
}

ResponseSummary execute_with_retry(Transport& transport, const PreparedRequest& r, double timeout_s,
                                   const RetryPolicy& policy) {
  auto backoff = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return transport.execute(r, timeout_s);
    } catch (const ConnectError&) {
      if (attempt >= policy.attempts) throw;
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
}

}  // namespace webphuzz::http
