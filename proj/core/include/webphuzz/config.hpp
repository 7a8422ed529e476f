#pragma once

// Fuzzer config files. One JSON object per endpoint:
//
//   { "target": "http://web/vulnerabilities/exec/",
//     "login": "dvwa_requests",            // login profile or null
//     "methods": ["POST"],
//     "cookies" | "body_params" | "query_params" | "headers": {
//        "data":   [ {"name": "ip", "seeds": ["fuzz"]}, {"name": "Submit", "value": "Submit"} ],
//        "fixed":  ["Submit"],              // regexes over parameter names
//        "fuzz":   [".*"],
//        "login":  ["PHPSESSID"],           // cookies only
//        "weight": 1.0 },
//     "timeout": 300,                       // optional
//     "coverage_path_constraint": "/var/www/html/" }   // optional
//
// A parameter is login if listed under "login", else fixed if its name fully
// matches a "fixed" regex, else fuzz if it matches a "fuzz" regex, else fixed.

#include <filesystem>
#include <string>
#include <string_view>

#include "webphuzz/model.hpp"

namespace webphuzz::config {

std::string_view group_key(ParamLocation location);

// Mode the marking rules of `group` assign to `name`. Throws ConfigError on a
// bad regex.
ParamMode resolve_mode(const ParamGroup& group, std::string_view name, ParamLocation location);

// Throws ParseError (malformed JSON) or ConfigError (schema or invariants).
EndpointConfig parse_config(std::string_view text);
EndpointConfig load_config(const std::filesystem::path& path);

// Inverse of parse_config. Throws ConfigError if a parameter's mode is not
// what the group's marking rules would give it back.
std::string emit_config(const EndpointConfig& cfg);
void save_config(const std::filesystem::path& path, const EndpointConfig& cfg);

}  // namespace webphuzz::config
