#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace webphuzz {

struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;   // always begins with '/'
  std::string query;  // without the leading '?'

  // scheme://host[:port]
  std::string origin() const;
};

// Parses an absolute http(s) URL. Returns nullopt for anything else.
std::optional<Url> parse_url(std::string_view text);

// RFC 3986 percent-encoding: everything outside the unreserved set
// (ALPHA / DIGIT / "-" / "." / "_" / "~") becomes %XX with uppercase hex.
std::string percent_encode(std::string_view raw);

// Inverse of percent_encode. With `plus_as_space`, '+' decodes to ' ' as in
// application/x-www-form-urlencoded. Malformed escapes pass through verbatim.
std::string percent_decode(std::string_view text, bool plus_as_space = false);

// Splits `a=1&b=2` into decoded pairs in order of appearance.
std::vector<std::pair<std::string, std::string>> parse_form(std::string_view text);

// Joins pairs as `name=value&...`, percent-encoding both sides.
std::string encode_form(const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace webphuzz
