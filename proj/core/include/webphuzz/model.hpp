#pragma once

// Domain types shared by every part of the fuzzer: endpoint configs, candidate
// requests, feedback records and alerts.

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace webphuzz {

enum class ParamLocation { query, body, cookie, header };

// Canonical location order used for hashing and serialization.
inline constexpr ParamLocation kAllLocations[] = {ParamLocation::query, ParamLocation::body,
                                                  ParamLocation::cookie, ParamLocation::header};

std::string_view to_string(ParamLocation location);
std::optional<ParamLocation> parse_location(std::string_view text);

enum class ParamMode { fixed, fuzz, login };

std::string_view to_string(ParamMode mode);

enum class HttpMethod { GET, POST, PUT, DELETE, OPTIONS, TRACE, HEAD, PATCH };

std::string_view to_string(HttpMethod method);
std::optional<HttpMethod> parse_method(std::string_view text);

// POST, PUT and DELETE are the only methods that carry body parameters.
bool method_carries_body(HttpMethod method);

struct ParamSpec {
  std::string name;
  std::vector<std::string> seeds;
  ParamMode mode = ParamMode::fuzz;
  ParamLocation location = ParamLocation::query;

  bool operator==(const ParamSpec&) const = default;
};

// One location's parameters plus the marking rules they were derived from.
// The pattern lists are kept so a parsed config re-emits unchanged.
struct ParamGroup {
  std::vector<ParamSpec> params;
  double weight = 0.0;
  std::vector<std::string> fixed_patterns;
  std::vector<std::string> fuzz_patterns;
  std::vector<std::string> login_names;

  bool has_fuzz_params() const;
  bool operator==(const ParamGroup&) const = default;
};

struct EndpointConfig {
  std::string target_url;
  std::vector<HttpMethod> methods;
  std::map<ParamLocation, ParamGroup> param_groups;
  std::optional<std::string> login_profile;
  double timeout_s = 300.0;
  std::optional<std::string> coverage_path_constraint;

  // Throws ConfigError when an invariant does not hold.
  void validate() const;

  const ParamGroup* group(ParamLocation location) const;
  bool has_fuzz_params() const;
  bool operator==(const EndpointConfig&) const = default;
};

// True if `name` is usable as a parameter name at `location`.
bool is_legal_param_name(std::string_view name, ParamLocation location);

struct ParamKey {
  ParamLocation location = ParamLocation::query;
  std::string name;

  auto operator<=>(const ParamKey&) const = default;
};

enum class MutatorKind {
  insert_char,
  delete_char,
  replace_char,
  swap_chars,
  insert_digit,
  delete_digit,
  replace_digit,
  swap_digits,
  duplicate_slice,
  truncate_tail,
  protocol_prefix,
  patr_payload,
  xss_payload,
};

inline constexpr int kGenericMutatorCount = 10;

std::string_view to_string(MutatorKind kind);
bool is_special(MutatorKind kind);

enum class MarkerClass { xss, patr, opre };

std::string_view to_string(MarkerClass c);

// A payload inserted by a special mutator. XSS markers carry a fresh
// `fz` + 8 hex token; path-traversal and protocol markers record the literal
// payload that was inserted.
struct MarkerToken {
  std::string token;
  MarkerClass vuln_class = MarkerClass::xss;
  ParamKey param;

  bool operator==(const MarkerToken&) const = default;
};

struct ResponseSummary {
  int status = 0;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  bool truncated = false;

  // Case-insensitive lookup of the first header with this name.
  std::optional<std::string> header(std::string_view name) const;
};

struct Candidate {
  std::shared_ptr<const EndpointConfig> endpoint;
  HttpMethod method = HttpMethod::GET;
  std::map<ParamKey, std::string> values;
  std::string feedback_id;
  std::optional<std::string> parent_hash;
  std::uint64_t score = 0;
  std::vector<MarkerToken> markers;
  std::optional<ResponseSummary> response;
  std::optional<MutatorKind> mutation;

  // Mode of a value slot, looked up in the endpoint config. Slots that are not
  // declared there (login cookies added at runtime) report `login`.
  ParamMode mode_of(const ParamKey& key) const;

  // Values of every fuzz-mode parameter.
  std::vector<std::pair<ParamKey, std::string>> fuzz_values() const;
};

struct PhpError {
  std::string message;
  std::string file;
  int line = 0;

  bool operator==(const PhpError&) const = default;
};

struct PhpException {
  std::string class_name;
  std::string message;
  std::string file;
  int line = 0;

  bool operator==(const PhpException&) const = default;
};

struct HookException {
  std::string class_name;
  std::string message;

  bool operator==(const HookException&) const = default;
};

inline constexpr std::size_t kMaxHookArgBytes = 4096;

struct HookEvent {
  std::string function;
  std::vector<std::string> args;
  std::optional<std::string> error;
  std::optional<HookException> exception;
  bool returned_false = false;

  bool operator==(const HookEvent&) const = default;
};

enum class Termination { normal, exit, error, shutdown };

std::string_view to_string(Termination t);
std::optional<Termination> parse_termination(std::string_view text);

struct FeedbackRecord {
  std::string id;
  std::map<std::string, std::vector<int>> coverage;  // file -> sorted unique lines
  std::vector<HookEvent> hook_events;
  std::vector<PhpError> php_errors;
  std::vector<PhpException> php_exceptions;
  Termination termination = Termination::normal;

  std::size_t covered_line_count() const;
  bool operator==(const FeedbackRecord&) const = default;
};

enum class VulnClass { sqli, rce, patr, ides, xxe, xss, opre };

inline constexpr VulnClass kAllVulnClasses[] = {VulnClass::sqli, VulnClass::rce, VulnClass::patr,
                                                VulnClass::ides, VulnClass::xxe, VulnClass::xss,
                                                VulnClass::opre};

std::string_view to_string(VulnClass c);
std::optional<VulnClass> parse_vuln_class(std::string_view text);

enum class Confidence { confirmed_param_flow, heuristic };

std::string_view to_string(Confidence c);

struct ResponseExcerpt {
  int status = 0;
  std::string location;
  std::string snippet;

  bool operator==(const ResponseExcerpt&) const = default;
};

using Evidence = std::variant<HookEvent, ResponseExcerpt, PhpError, PhpException>;

struct MatchedParam {
  ParamLocation location = ParamLocation::query;
  std::string name;
  std::string value;

  bool operator==(const MatchedParam&) const = default;
};

struct VulnAlert {
  VulnClass vuln_class = VulnClass::sqli;
  std::string candidate_hash;
  Evidence evidence;
  std::vector<MatchedParam> matched_params;
  Confidence confidence = Confidence::heuristic;

  bool operator==(const VulnAlert&) const = default;
};

// SHA-256 (lowercase hex) over the candidate's canonical form: method, target
// path, then per location the sorted `name=value` pairs of non-login params.
// Feedback id, score, lineage and markers do not contribute.
std::string candidate_hash(const Candidate& c);

// The exact byte string `candidate_hash` digests.
std::string canonical_form(const Candidate& c);

}  // namespace webphuzz
