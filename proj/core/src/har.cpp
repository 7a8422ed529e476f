#include "webphuzz/har.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "json.hpp"
#include "webphuzz/config.hpp"
#include "webphuzz/error.hpp"
#include "webphuzz/url.hpp"

namespace webphuzz::har {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Headers that the transport owns or that are carried elsewhere.
bool skipped_header(const std::string& lname) {
  static const std::set<std::string> skip = {"host",           "content-length", "cookie",
                                             "connection",     "accept-encoding", "transfer-encoding",
                                             "x-fuzzer-covid", "content-type",    "keep-alive",
                                             "upgrade",        "te",              "trailer"};
  return lname.empty() || lname[0] == ':' || skip.count(lname) > 0;
}

void add_value(std::vector<ObservedParam>& params, const std::string& name, const std::string& value) {
  for (auto& p : params) {
    if (p.name == name) {
      if (std::find(p.values.begin(), p.values.end(), value) == p.values.end()) p.values.push_back(value);
      return;
    }
  }
  params.push_back({name, {value}});
}

std::string str_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it != obj.end() && it->is_string() ? it->get<std::string>() : std::string();
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void parse_body(const json& post, CapturedRequest& req) {
  auto mime = lower(str_field(post, "mimeType"));
  auto semicolon = mime.find(';');
  auto base = mime.substr(0, semicolon);
  auto& body = req.params[ParamLocation::body];

  if (base == "application/x-www-form-urlencoded" || (base.empty() && post.contains("params"))) {
    if (auto it = post.find("params"); it != post.end() && it->is_array() && !it->empty()) {
      for (const auto& p : *it) add_value(body, str_field(p, "name"), str_field(p, "value"));
    } else {
      for (auto& [k, v] : parse_form(str_field(post, "text"))) add_value(body, k, v);
    }
    return;
  }
  if (base == "application/json" || (base.size() > 5 && base.compare(base.size() - 5, 5, "+json") == 0)) {
    json doc;
    try {
      doc = json::parse(str_field(post, "text"));
    } catch (const json::parse_error&) {
      throw UnsupportedBody(base + " (body is not valid JSON)");
    }
    if (!doc.is_object()) throw UnsupportedBody(base + " (body is not a JSON object)");
    for (const auto& [k, v] : doc.items()) add_value(body, k, scalar_text(v));
    req.json_body = true;
    return;
  }
  if (base.empty() && str_field(post, "text").empty()) return;
  throw UnsupportedBody(base.empty() ? "unknown" : base);
}

CapturedRequest parse_entry(const json& entry) {
  if (!entry.is_object() || !entry.contains("request") || !entry["request"].is_object())
    throw ParseError("HAR entry without request object", 0);
  const auto& r = entry["request"];

  CapturedRequest req;
  auto method_text = str_field(r, "method");
  auto method = parse_method(method_text);
  if (!method) throw ConfigError("unsupported method '" + method_text + "'");
  req.method = *method;

  auto url = parse_url(str_field(r, "url"));
  if (!url) throw ConfigError("not an absolute http(s) URL: '" + str_field(r, "url") + "'");
  req.target = url->origin() + url->path;
  req.path = url->path;

  for (auto& [k, v] : parse_form(url->query)) add_value(req.params[ParamLocation::query], k, v);

  if (auto it = r.find("cookies"); it != r.end() && it->is_array()) {
    for (const auto& c : *it) add_value(req.params[ParamLocation::cookie], str_field(c, "name"), str_field(c, "value"));
  }
  if (auto it = r.find("headers"); it != r.end() && it->is_array()) {
    for (const auto& h : *it) {
      auto name = str_field(h, "name");
      auto lname = lower(name);
      auto value = str_field(h, "value");
      if (lname == "cookie" && req.params[ParamLocation::cookie].empty()) {
        // Fallback for captures without the parsed cookies array.
        std::size_t start = 0;
        while (start < value.size()) {
          auto end = value.find(';', start);
          if (end == std::string::npos) end = value.size();
          auto pair = value.substr(start, end - start);
          auto first = pair.find_first_not_of(' ');
          if (first != std::string::npos) pair = pair.substr(first);
          auto eq = pair.find('=');
          if (eq != std::string::npos && eq > 0)
            add_value(req.params[ParamLocation::cookie], pair.substr(0, eq), percent_decode(pair.substr(eq + 1)));
          start = end + 1;
        }
      }
      if (skipped_header(lname)) continue;
      if (value.find_first_of("\r\n") != std::string::npos) continue;
      add_value(req.params[ParamLocation::header], name, value);
    }
  }

  if (auto it = r.find("postData"); it != r.end() && it->is_object()) parse_body(*it, req);
  if (req.json_body) add_value(req.params[ParamLocation::header], "Content-Type", "application/json");

  if (auto resp = entry.find("response"); resp != entry.end() && resp->is_object()) {
    if (auto content = resp->find("content"); content != resp->end() && content->is_object()) {
      auto mime = str_field(*content, "mimeType");
      if (!mime.empty()) req.response_mime = lower(mime);
    }
  }

  for (auto it = req.params.begin(); it != req.params.end();) {
    auto& params = it->second;
    params.erase(std::remove_if(params.begin(), params.end(),
                                [&](const ObservedParam& p) { return !is_legal_param_name(p.name, it->first); }),
                 params.end());
    it = params.empty() ? req.params.erase(it) : std::next(it);
  }
  return req;
}

bool is_static(const CapturedRequest& r, const FilterOptions& options) {
  auto path = lower(r.path);
  for (const auto& ext : options.static_extensions) {
    auto e = lower(ext);
    if (path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0) return true;
  }
  if (r.response_mime) {
    const auto& m = *r.response_mime;
    if (m.rfind("image/", 0) == 0 || m.rfind("font/", 0) == 0) return true;
  }
  return false;
}

std::string dedup_key(const CapturedRequest& r) {
  std::string key = std::string(to_string(r.method)) + " " + r.target;
  for (const auto& [location, params] : r.params) {
    std::vector<std::string> names;
    for (const auto& p : params) names.push_back(p.name);
    std::sort(names.begin(), names.end());
    key += "\n" + std::string(to_string(location)) + ":";
    for (const auto& n : names) key += n + "&";
  }
  return key;
}

}  // namespace

ParseResult parse_har(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  if (!doc.is_object() || !doc.contains("log") || !doc["log"].is_object() || !doc["log"].contains("entries") ||
      !doc["log"]["entries"].is_array())
    throw ParseError("not a HAR document: missing log.entries", 0);

  ParseResult result;
  std::size_t index = 0;
  for (const auto& entry : doc["log"]["entries"]) {
    try {
      result.requests.push_back(parse_entry(entry));
    } catch (const UnsupportedBody& e) {
      result.warnings.push_back("entry " + std::to_string(index) + " skipped: " + e.what());
    } catch (const ConfigError& e) {
      result.warnings.push_back("entry " + std::to_string(index) + " skipped: " + e.what());
    }
    ++index;
  }
  return result;
}

std::vector<std::string> default_static_extensions() {
  return {".css", ".js", ".png", ".jpg", ".jpeg", ".gif", ".svg", ".ico", ".woff", ".woff2", ".ttf", ".map"};
}

FilterResult filter_endpoints(const std::vector<CapturedRequest>& requests, const FilterOptions& options) {
  FilterResult result;
  std::map<std::string, std::size_t> seen;
  for (const auto& r : requests) {
    if (is_static(r, options)) {
      ++result.dropped_static;
      continue;
    }
    auto key = dedup_key(r);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, result.endpoints.size());
      result.endpoints.push_back(r);
      continue;
    }
    ++result.merged;
    auto& into = result.endpoints[it->second];
    for (const auto& [location, params] : r.params) {
      for (const auto& p : params) {
        for (const auto& v : p.values) add_value(into.params[location], p.name, v);
      }
    }
  }
  return result;
}

EndpointConfig to_fuzzer_config(const CapturedRequest& request, const Markings& markings) {
  std::regex session;
  try {
    session = std::regex(markings.session_regex, std::regex::icase);
  } catch (const std::regex_error& e) {
    throw ConfigError("bad session regex: " + std::string(e.what()));
  }

  EndpointConfig cfg;
  cfg.target_url = request.target;
  cfg.methods = {request.method};

  // The cookies group is always present so the login list has a home.
  cfg.param_groups[ParamLocation::cookie];
  for (const auto& [location, params] : request.params) cfg.param_groups[location];

  for (auto& [location, group] : cfg.param_groups) {
    bool fuzzable = location == ParamLocation::query || location == ParamLocation::body;
    if (fuzzable) {
      group.fixed_patterns = markings.fixed_regex;
      group.fuzz_patterns = {".*"};
    } else {
      group.fixed_patterns = {".*"};
    }
    auto it = request.params.find(location);
    if (it == request.params.end()) continue;
    if (location == ParamLocation::cookie) {
      for (const auto& p : it->second) {
        if (std::regex_match(p.name, session)) group.login_names.push_back(p.name);
      }
    }
    for (const auto& p : it->second) {
      // Session cookies come from the login profile at run time.
      if (location == ParamLocation::cookie &&
          std::find(group.login_names.begin(), group.login_names.end(), p.name) != group.login_names.end())
        continue;
      ParamSpec spec;
      spec.name = p.name;
      spec.location = location;
      spec.mode = config::resolve_mode(group, p.name, location);
      if (spec.mode == ParamMode::fuzz) {
        spec.seeds = p.values;
      } else if (spec.mode == ParamMode::fixed) {
        spec.seeds = {p.values.front()};
      }
      group.params.push_back(std::move(spec));
    }
  }

  std::size_t fuzz_groups = 0;
  for (const auto& [location, group] : cfg.param_groups) fuzz_groups += group.has_fuzz_params() ? 1 : 0;
  for (auto& [location, group] : cfg.param_groups)
    group.weight = group.has_fuzz_params() ? 1.0 / static_cast<double>(fuzz_groups) : 0.0;

  cfg.validate();
  return cfg;
}

std::string endpoint_slug(const CapturedRequest& request) {
  // Path characters outside [A-Za-z0-9.-] become '_', runs collapse, and the
  // ends are trimmed: POST /vulnerabilities/exec/ -> POST_vulnerabilities_exec.
  std::string path;
  for (char c : request.path) {
    char out = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_';
    if (out == '_' && (path.empty() || path.back() == '_')) continue;
    path += out;
  }
  while (!path.empty() && path.back() == '_') path.pop_back();
  std::string slug(to_string(request.method));
  if (!path.empty()) slug += "_" + path;
  return slug;
}

}  // namespace webphuzz::har
