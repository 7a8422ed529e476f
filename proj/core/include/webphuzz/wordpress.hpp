#pragma once

// Finds WordPress AJAX APIs (`wp_ajax_<api>` / `wp_ajax_nopriv_<api>` action
// registrations) in plugin sources and the request parameters their handlers
// read. Purely textual; handlers that cannot be located are reported and
// emitted without parameters.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "webphuzz/model.hpp"

namespace webphuzz::wp {

struct WpEndpoint {
  std::string api_name;
  bool privileged = true;  // wp_ajax_ (logged-in users) vs wp_ajax_nopriv_
  std::string handler;
  std::filesystem::path source_file;
  bool handler_found = false;
  std::map<ParamLocation, std::vector<std::string>> params;
};

struct Extraction {
  std::vector<WpEndpoint> endpoints;
  std::vector<std::string> warnings;  // HandlerNotFound entries
};

// Scans every .php file below `plugin_dir` in path order. Throws IoError if
// the directory cannot be read.
Extraction extract_wp_endpoints(const std::filesystem::path& plugin_dir);

// Same scan over in-memory sources (file name -> contents).
Extraction extract_wp_endpoints(const std::map<std::string, std::string>& sources);

struct WpConfigOptions {
  std::string base_url = "http://web";
  std::string login_profile = "wordpress";  // used for privileged APIs
  std::string seed = "fuzz";
};

inline constexpr std::string_view kAjaxPath = "/wp-admin/admin-ajax.php";

// POST to admin-ajax.php with a fixed `action=<api>` body parameter and every
// extracted parameter as a fuzz parameter seeded with `options.seed`.
EndpointConfig to_fuzzer_config(const WpEndpoint& ep, const WpConfigOptions& options = {});

// api_name,privileged,handler,file,params,status
std::string to_csv(const Extraction& ex);

}  // namespace webphuzz::wp
