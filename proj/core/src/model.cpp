#include "webphuzz/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "webphuzz/error.hpp"
#include "webphuzz/hash.hpp"
#include "webphuzz/url.hpp"

namespace webphuzz {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

// RFC 7230 tchar.
bool is_tchar(char c) {
  if (std::isalnum(static_cast<unsigned char>(c))) return true;
  switch (c) {
    case '!': case '#': case '$': case '%': case '&': case '\'': case '*':
    case '+': case '-': case '.': case '^': case '_': case '`': case '|': case '~':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string_view to_string(ParamLocation location) {
  switch (location) {
    case ParamLocation::query: return "query";
    case ParamLocation::body: return "body";
    case ParamLocation::cookie: return "cookie";
    case ParamLocation::header: return "header";
  }
  return "query";
}

std::optional<ParamLocation> parse_location(std::string_view text) {
  for (auto loc : kAllLocations) {
    if (to_string(loc) == text) return loc;
  }
  return std::nullopt;
}

std::string_view to_string(ParamMode mode) {
  switch (mode) {
    case ParamMode::fixed: return "fixed";
    case ParamMode::fuzz: return "fuzz";
    case ParamMode::login: return "login";
  }
  return "fixed";
}

std::string_view to_string(HttpMethod method) {
  switch (method) {
    case HttpMethod::GET: return "GET";
    case HttpMethod::POST: return "POST";
    case HttpMethod::PUT: return "PUT";
    case HttpMethod::DELETE: return "DELETE";
    case HttpMethod::OPTIONS: return "OPTIONS";
    case HttpMethod::TRACE: return "TRACE";
    case HttpMethod::HEAD: return "HEAD";
    case HttpMethod::PATCH: return "PATCH";
  }
  return "GET";
}

std::optional<HttpMethod> parse_method(std::string_view text) {
  static constexpr HttpMethod all[] = {HttpMethod::GET,     HttpMethod::POST,  HttpMethod::PUT,
                                       HttpMethod::DELETE,  HttpMethod::OPTIONS,
                                       HttpMethod::TRACE,   HttpMethod::HEAD,  HttpMethod::PATCH};
  for (auto m : all) {
    if (iequals(to_string(m), text)) return m;
  }
  return std::nullopt;
}

bool method_carries_body(HttpMethod method) {
  return method == HttpMethod::POST || method == HttpMethod::PUT || method == HttpMethod::DELETE;
}

bool ParamGroup::has_fuzz_params() const {
  return std::any_of(params.begin(), params.end(),
                     [](const ParamSpec& p) { return p.mode == ParamMode::fuzz; });
}

const ParamGroup* EndpointConfig::group(ParamLocation location) const {
  auto it = param_groups.find(location);
  return it == param_groups.end() ? nullptr : &it->second;
}

bool EndpointConfig::has_fuzz_params() const {
  return std::any_of(param_groups.begin(), param_groups.end(),
                     [](const auto& kv) { return kv.second.has_fuzz_params(); });
}

bool is_legal_param_name(std::string_view name, ParamLocation location) {
  if (name.empty()) return false;
  switch (location) {
    case ParamLocation::cookie:
    case ParamLocation::header:
      return std::all_of(name.begin(), name.end(), is_tchar);
    case ParamLocation::query:
    case ParamLocation::body:
      // Anything goes once percent-encoded, except control characters.
      return std::none_of(name.begin(), name.end(), [](char c) {
        return static_cast<unsigned char>(c) < 0x20 || c == 0x7f;
      });
  }
  return false;
}

void EndpointConfig::validate() const {
  if (!parse_url(target_url)) throw ConfigError("target is not an absolute http(s) URL: " + target_url);
  if (!(timeout_s > 0.0)) throw ConfigError("timeout must be positive");

  int fuzz_groups = 0;
  double weight_sum = 0.0;
  for (const auto& [location, group] : param_groups) {
    if (group.weight < 0.0 || group.weight > 1.0)
      throw ConfigError("weight of group '" + std::string(to_string(location)) + "' outside [0,1]");
    for (const auto& p : group.params) {
      if (p.location != location)
        throw ConfigError("param '" + p.name + "' filed under the wrong location");
      if (!is_legal_param_name(p.name, location))
        throw ConfigError("illegal parameter name '" + p.name + "' for " +
                          std::string(to_string(location)));
      if (p.mode == ParamMode::fixed && p.seeds.size() != 1)
        throw ConfigError("fixed param '" + p.name + "' needs exactly one value");
      if (p.mode == ParamMode::fuzz && p.seeds.empty())
        throw ConfigError("fuzz param '" + p.name + "' has no seeds");
      if (p.mode == ParamMode::login && location != ParamLocation::cookie)
        throw ConfigError("login param '" + p.name + "' must be a cookie");
    }
    for (const auto& name : group.login_names) {
      if (location != ParamLocation::cookie)
        throw ConfigError("login names are only allowed in the cookies group");
      if (!is_legal_param_name(name, location))
        throw ConfigError("illegal login cookie name '" + name + "'");
    }
    if (group.has_fuzz_params()) {
      ++fuzz_groups;
      weight_sum += group.weight;
    }
  }
  if (fuzz_groups > 1 && std::abs(weight_sum - 1.0) > 1e-6)
    throw ConfigError("weights of fuzzable groups must sum to 1.0");
}

std::string_view to_string(MutatorKind kind) {
  switch (kind) {
    case MutatorKind::insert_char: return "insert_char";
    case MutatorKind::delete_char: return "delete_char";
    case MutatorKind::replace_char: return "replace_char";
    case MutatorKind::swap_chars: return "swap_chars";
    case MutatorKind::insert_digit: return "insert_digit";
    case MutatorKind::delete_digit: return "delete_digit";
    case MutatorKind::replace_digit: return "replace_digit";
    case MutatorKind::swap_digits: return "swap_digits";
    case MutatorKind::duplicate_slice: return "duplicate_slice";
    case MutatorKind::truncate_tail: return "truncate_tail";
    case MutatorKind::protocol_prefix: return "protocol_prefix";
    case MutatorKind::patr_payload: return "patr_payload";
    case MutatorKind::xss_payload: return "xss_payload";
  }
  return "insert_char";
}

bool is_special(MutatorKind kind) {
  return kind == MutatorKind::protocol_prefix || kind == MutatorKind::patr_payload ||
         kind == MutatorKind::xss_payload;
}

std::string_view to_string(MarkerClass c) {
  switch (c) {
    case MarkerClass::xss: return "xss";
    case MarkerClass::patr: return "patr";
    case MarkerClass::opre: return "opre";
  }
  return "xss";
}

std::optional<std::string> ResponseSummary::header(std::string_view name) const {
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) return v;
  }
  return std::nullopt;
}

ParamMode Candidate::mode_of(const ParamKey& key) const {
  if (endpoint) {
    if (const auto* g = endpoint->group(key.location)) {
      for (const auto& p : g->params) {
        if (p.name == key.name) return p.mode;
      }
    }
  }
  return ParamMode::login;
}

std::vector<std::pair<ParamKey, std::string>> Candidate::fuzz_values() const {
  std::vector<std::pair<ParamKey, std::string>> out;
  for (const auto& [key, value] : values) {
    if (mode_of(key) == ParamMode::fuzz) out.emplace_back(key, value);
  }
  return out;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::normal: return "normal";
    case Termination::exit: return "exit";
    case Termination::error: return "error";
    case Termination::shutdown: return "shutdown";
  }
  return "normal";
}

std::optional<Termination> parse_termination(std::string_view text) {
  for (auto t : {Termination::normal, Termination::exit, Termination::error, Termination::shutdown}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::size_t FeedbackRecord::covered_line_count() const {
  std::size_t n = 0;
  for (const auto& [file, lines] : coverage) n += lines.size();
  return n;
}

std::string_view to_string(VulnClass c) {
  switch (c) {
    case VulnClass::sqli: return "sqli";
    case VulnClass::rce: return "rce";
    case VulnClass::patr: return "patr";
    case VulnClass::ides: return "ides";
    case VulnClass::xxe: return "xxe";
    case VulnClass::xss: return "xss";
    case VulnClass::opre: return "opre";
  }
  return "sqli";
}

std::optional<VulnClass> parse_vuln_class(std::string_view text) {
  for (auto c : kAllVulnClasses) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Confidence c) {
  return c == Confidence::confirmed_param_flow ? "confirmed_param_flow" : "heuristic";
}

std::string canonical_form(const Candidate& c) {
  std::string out;
  out += to_string(c.method);
  out += '\n';
  if (c.endpoint) {
    if (auto url = parse_url(c.endpoint->target_url)) out += url->path;
    else out += c.endpoint->target_url;
  }
  for (auto location : kAllLocations) {
    out += '\n';
    std::vector<std::string> pairs;
    for (const auto& [key, value] : c.values) {
      if (key.location != location || c.mode_of(key) == ParamMode::login) continue;
      pairs.push_back(percent_encode(key.name) + "=" + percent_encode(value));
    }
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (i) out += '&';
      out += pairs[i];
    }
  }
  return out;
}

std::string candidate_hash(const Candidate& c) { return sha256_hex(canonical_form(c)); }

}  // namespace webphuzz
