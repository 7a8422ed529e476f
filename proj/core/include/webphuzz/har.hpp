#pragma once

// HAR 1.2 captures to fuzzer configs.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "webphuzz/model.hpp"

namespace webphuzz::har {

// A parameter with every value observed for it, in order of first sighting.
struct ObservedParam {
  std::string name;
  std::vector<std::string> values;
};

struct CapturedRequest {
  HttpMethod method = HttpMethod::GET;
  std::string target;  // scheme://host[:port]/path, no query
  std::string path;
  std::map<ParamLocation, std::vector<ObservedParam>> params;
  bool json_body = false;
  std::optional<std::string> response_mime;
};

struct ParseResult {
  std::vector<CapturedRequest> requests;
  std::vector<std::string> warnings;  // one per skipped entry
};

// Throws ParseError when the document is not a HAR log. Entries with
// unsupported bodies (multipart, binary) or methods are skipped with a warning.
ParseResult parse_har(std::string_view bytes);

std::vector<std::string> default_static_extensions();

struct FilterOptions {
  std::vector<std::string> static_extensions = default_static_extensions();
};

struct FilterResult {
  std::vector<CapturedRequest> endpoints;
  std::size_t dropped_static = 0;
  std::size_t merged = 0;  // duplicates folded into an earlier endpoint
};

// Drops static resources and merges requests with the same method, target and
// parameter-name set; the merged endpoint keeps every observed value.
FilterResult filter_endpoints(const std::vector<CapturedRequest>& requests, const FilterOptions& options = {});

inline constexpr std::string_view kDefaultSessionRegex = "PHPSESSID|.*session.*";

struct Markings {
  // Extra name patterns forced to fixed in every group.
  std::vector<std::string> fixed_regex;
  std::string session_regex = std::string(kDefaultSessionRegex);
};

// Query and body parameters become fuzz, session-looking cookies login, and
// everything else fixed. Groups holding fuzz parameters share the weight
// equally.
EndpointConfig to_fuzzer_config(const CapturedRequest& request, const Markings& markings = {});

// File-name friendly `<method>_<path>` label.
std::string endpoint_slug(const CapturedRequest& request);

}  // namespace webphuzz::har
