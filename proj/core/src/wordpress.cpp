#include "webphuzz/wordpress.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "webphuzz/error.hpp"

namespace webphuzz::wp {

namespace fs = std::filesystem;

namespace {

// add_action( 'wp_ajax_<api>' , <handler> ...
const std::regex& registration_re() {
  static const std::regex re(R"(add_action\s*\(\s*(['"])wp_ajax_(nopriv_)?([A-Za-z0-9_\-]+)\1\s*,\s*)");
  return re;
}

// Handler forms: 'name', 'Class::name', array($obj, 'name'), [$obj, 'name'].
std::string handler_name(std::string_view rest) {
  static const std::regex plain(R"(^(['"])(?:[A-Za-z0-9_\\]+::)?([A-Za-z_][A-Za-z0-9_]*)\1)");
  static const std::regex array_form(R"(^(?:array\s*\(|\[)\s*[^,\)\]]+,\s*(['"])([A-Za-z_][A-Za-z0-9_]*)\1\s*[\)\]])");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(rest.begin(), rest.end(), m, plain)) return m[2].str();
  if (std::regex_search(rest.begin(), rest.end(), m, array_form)) return m[2].str();
  return {};
}

// Index just past the brace matching the one at `open`, skipping strings and
// comments. npos if unbalanced.
std::size_t match_brace(std::string_view src, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < src.size(); ++i) {
    char c = src[i];
    if (c == '\'' || c == '"') {
      for (++i; i < src.size() && src[i] != c; ++i) {
        if (src[i] == '\\') ++i;
      }
    } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      i = src.find('\n', i);
      if (i == std::string_view::npos) return i;
    } else if (c == '#') {
      i = src.find('\n', i);
      if (i == std::string_view::npos) return i;
    } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      i = src.find("*/", i + 2);
      if (i == std::string_view::npos) return i;
      ++i;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<std::string_view> function_body(std::string_view src, const std::string& name) {
  std::regex def("function\\s+&?" + name + "\\s*\\(");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(src.begin(), src.end(), m, def)) return std::nullopt;
  auto start = static_cast<std::size_t>(m.position(0) + m.length(0));
  auto open = src.find('{', start);
  if (open == std::string_view::npos) return std::nullopt;
  auto close = match_brace(src, open);
  if (close == std::string_view::npos) return std::nullopt;
  return src.substr(open, close - open);
}

void collect_params(std::string_view body, WpEndpoint& ep) {
  static const std::regex access(R"(\$_(REQUEST|GET|POST|COOKIE)\s*\[\s*(['"])([^'"]+)\2\s*\])");
  for (std::regex_iterator<std::string_view::const_iterator> it(body.begin(), body.end(), access), end; it != end;
       ++it) {
    auto super = (*it)[1].str();
    auto name = (*it)[3].str();
    if (name == "action") continue;  // fixed by the endpoint itself
    ParamLocation location = super == "GET"      ? ParamLocation::query
                             : super == "COOKIE" ? ParamLocation::cookie
                                                 : ParamLocation::body;
    if (!is_legal_param_name(name, location)) continue;
    auto& names = ep.params[location];
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

Extraction extract_wp_endpoints(const std::map<std::string, std::string>& sources) {
  Extraction ex;
  for (const auto& [file, src] : sources) {
    std::string_view text(src);
    for (std::regex_iterator<std::string_view::const_iterator> it(text.begin(), text.end(), registration_re()), end;
         it != end; ++it) {
      WpEndpoint ep;
      ep.privileged = !(*it)[2].matched;
      ep.api_name = (*it)[3].str();
      ep.source_file = file;
      auto rest = text.substr(static_cast<std::size_t>(it->position(0) + it->length(0)));
      ep.handler = handler_name(rest);

      if (!ep.handler.empty()) {
        // Handlers are often defined in another file of the plugin.
        std::optional<std::string_view> body = function_body(text, ep.handler);
        for (auto s = sources.begin(); !body && s != sources.end(); ++s) body = function_body(s->second, ep.handler);
        if (body) {
          ep.handler_found = true;
          collect_params(*body, ep);
        }
      }
      if (!ep.handler_found) {
        ex.warnings.push_back("HandlerNotFound: " + ep.api_name + " (" +
                              (ep.handler.empty() ? std::string("unnamed handler") : ep.handler) + ") in " + file);
      }
      ex.endpoints.push_back(std::move(ep));
    }
  }
  return ex;
}

Extraction extract_wp_endpoints(const fs::path& plugin_dir) {
  std::error_code ec;
  if (!fs::is_directory(plugin_dir, ec)) throw IoError("not a readable directory: " + plugin_dir.string());
  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(plugin_dir, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw IoError("cannot read " + plugin_dir.string() + ": " + ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw IoError("cannot read " + plugin_dir.string() + ": " + ec.message());
    if (it->is_regular_file(ec) && it->path().extension() == ".php") files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, std::string> sources;
  for (const auto& f : files) sources[fs::relative(f, plugin_dir).generic_string()] = read_file(f);
  return extract_wp_endpoints(sources);
}

EndpointConfig to_fuzzer_config(const WpEndpoint& ep, const WpConfigOptions& options) {
  EndpointConfig cfg;
  auto base = options.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  cfg.target_url = base + std::string(kAjaxPath);
  cfg.methods = {HttpMethod::POST};
  if (ep.privileged && !options.login_profile.empty()) cfg.login_profile = options.login_profile;

  auto& body = cfg.param_groups[ParamLocation::body];
  body.fixed_patterns = {"action"};
  body.fuzz_patterns = {".*"};
  body.params.push_back({"action", {ep.api_name}, ParamMode::fixed, ParamLocation::body});

  auto& cookies = cfg.param_groups[ParamLocation::cookie];
  cookies.fuzz_patterns = {".*"};

  for (const auto& [location, names] : ep.params) {
    auto& group = cfg.param_groups[location];
    if (group.fuzz_patterns.empty()) group.fuzz_patterns = {".*"};
    for (const auto& n : names) group.params.push_back({n, {options.seed}, ParamMode::fuzz, location});
  }

  std::size_t fuzz_groups = 0;
  for (const auto& [location, group] : cfg.param_groups) fuzz_groups += group.has_fuzz_params() ? 1 : 0;
  for (auto& [location, group] : cfg.param_groups)
    group.weight = group.has_fuzz_params() ? 1.0 / static_cast<double>(fuzz_groups) : 0.0;
  cfg.validate();
  return cfg;
}

std::string to_csv(const Extraction& ex) {
  std::string out = "api_name,privileged,handler,file,params,status\n";
  for (const auto& ep : ex.endpoints) {
    std::string params;
    for (const auto& [location, names] : ep.params) {
      for (const auto& n : names) params += (params.empty() ? "" : " ") + std::string(to_string(location)) + ":" + n;
    }
    out += csv_field(ep.api_name) + "," + (ep.privileged ? "true" : "false") + "," + csv_field(ep.handler) + "," +
           csv_field(ep.source_file.generic_string()) + "," + csv_field(params) + "," +
           (ep.handler_found ? "ok" : "handler_not_found") + "\n";
  }
  return out;
}

}  // namespace webphuzz::wp
