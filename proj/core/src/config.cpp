#include "webphuzz/config.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "webphuzz/error.hpp"

namespace webphuzz::config {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kDefaultTimeout = 300.0;

bool any_full_match(const std::vector<std::string>& patterns, std::string_view name) {
  for (const auto& p : patterns) {
    try {
      if (std::regex_match(name.begin(), name.end(), std::regex(p))) return true;
    } catch (const std::regex_error& e) {
      throw ConfigError("bad name pattern '" + p + "': " + e.what());
    }
  }
  return false;
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& where) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_array()) throw ConfigError(where + "." + key + " must be an array of strings");
  for (const auto& v : *it) {
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

ParamGroup parse_group(const json& g, ParamLocation location) {
  std::string where(group_key(location));
  if (!g.is_object()) throw ConfigError(where + " must be an object");
  ParamGroup group;
  group.fixed_patterns = string_list(g, "fixed", where);
  group.fuzz_patterns = string_list(g, "fuzz", where);
  group.login_names = string_list(g, "login", where);
  if (auto it = g.find("weight"); it != g.end()) {
    if (!it->is_number()) throw ConfigError(where + ".weight must be a number");
    group.weight = it->get<double>();
  }
  if (auto it = g.find("data"); it != g.end()) {
    if (!it->is_array()) throw ConfigError(where + ".data must be an array");
    for (const auto& d : *it) {
      if (!d.is_object() || !d.contains("name") || !d["name"].is_string())
        throw ConfigError(where + ".data entries need a string 'name'");
      ParamSpec p;
      p.name = d["name"].get<std::string>();
      p.location = location;
      if (auto v = d.find("seeds"); v != d.end()) {
        p.seeds = string_list(d, "seeds", where + "." + p.name);
      } else if (auto v2 = d.find("value"); v2 != d.end()) {
        if (!v2->is_string()) throw ConfigError(where + "." + p.name + ".value must be a string");
        p.seeds = {v2->get<std::string>()};
      }
      p.mode = resolve_mode(group, p.name, location);
      group.params.push_back(std::move(p));
    }
  }
  return group;
}

}  // namespace

std::string_view group_key(ParamLocation location) {
  switch (location) {
    case ParamLocation::query: return "query_params";
    case ParamLocation::body: return "body_params";
    case ParamLocation::cookie: return "cookies";
    case ParamLocation::header: return "headers";
  }
  return "query_params";
}

ParamMode resolve_mode(const ParamGroup& group, std::string_view name, ParamLocation location) {
  if (location == ParamLocation::cookie &&
      std::find(group.login_names.begin(), group.login_names.end(), name) != group.login_names.end())
    return ParamMode::login;
  if (any_full_match(group.fixed_patterns, name)) return ParamMode::fixed;
  if (any_full_match(group.fuzz_patterns, name)) return ParamMode::fuzz;
  return ParamMode::fixed;
}

EndpointConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  EndpointConfig cfg;
  if (!doc.contains("target") || !doc["target"].is_string()) throw ConfigError("missing string 'target'");
  cfg.target_url = doc["target"].get<std::string>();

  if (auto it = doc.find("login"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw ConfigError("'login' must be a string or null");
    if (!it->get<std::string>().empty()) cfg.login_profile = it->get<std::string>();
  }

  for (const auto& m : string_list(doc, "methods", "config")) {
    auto method = parse_method(m);
    if (!method) throw ConfigError("unsupported method '" + m + "'");
    cfg.methods.push_back(*method);
  }

  for (auto location : kAllLocations) {
    auto it = doc.find(std::string(group_key(location)));
    if (it == doc.end() || it->is_null()) continue;
    cfg.param_groups[location] = parse_group(*it, location);
  }

  if (auto it = doc.find("timeout"); it != doc.end()) {
    if (!it->is_number()) throw ConfigError("'timeout' must be a number");
    cfg.timeout_s = it->get<double>();
  }
  if (auto it = doc.find("coverage_path_constraint"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw ConfigError("'coverage_path_constraint' must be a string");
    cfg.coverage_path_constraint = it->get<std::string>();
  }

  cfg.validate();
  return cfg;
}

EndpointConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const EndpointConfig& cfg) {
  ordered_json doc;
  doc["target"] = cfg.target_url;
  doc["login"] = cfg.login_profile ? ordered_json(*cfg.login_profile) : ordered_json(nullptr);
  doc["methods"] = ordered_json::array();
  for (auto m : cfg.methods) doc["methods"].push_back(std::string(to_string(m)));

  for (const auto& [location, group] : cfg.param_groups) {
    ordered_json g;
    g["data"] = ordered_json::array();
    for (const auto& p : group.params) {
      if (resolve_mode(group, p.name, location) != p.mode)
        throw ConfigError("mode of '" + p.name + "' does not follow the group's marking rules");
      ordered_json d;
      d["name"] = p.name;
      if (p.mode == ParamMode::fuzz)
        d["seeds"] = p.seeds;
      else if (!p.seeds.empty())
        d["value"] = p.seeds.front();
      g["data"].push_back(std::move(d));
    }
    g["fixed"] = group.fixed_patterns;
    g["fuzz"] = group.fuzz_patterns;
    if (location == ParamLocation::cookie) g["login"] = group.login_names;
    g["weight"] = group.weight;
    doc[std::string(group_key(location))] = std::move(g);
  }
  if (cfg.timeout_s != kDefaultTimeout) doc["timeout"] = cfg.timeout_s;
  if (cfg.coverage_path_constraint) doc["coverage_path_constraint"] = *cfg.coverage_path_constraint;
  return doc.dump(4) + "\n";
}

void save_config(const fs::path& path, const EndpointConfig& cfg) {
  auto text = emit_config(cfg);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace webphuzz::config
