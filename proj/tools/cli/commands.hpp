#pragma once

// Subcommands of the `webphuzz` tool. Each returns the process exit code and
// writes human-readable output to `out`, diagnostics to `err`.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace webphuzz::cli {

struct HargenOptions {
  std::filesystem::path har_path;
  std::filesystem::path out_dir;
  std::vector<std::string> fixed_regex;
  std::optional<std::string> session_regex;
  bool force = false;
};

int cmd_hargen(const HargenOptions& o, std::ostream& out, std::ostream& err);

struct ComposeOptions {
  std::vector<std::filesystem::path> config_paths;
  std::filesystem::path out_path;
  int instances = 1;
  std::string coverage_driver = "xdebug";
  std::string policy = "param_based";
  std::string app_source = "./app";
  bool wp_overrides = false;
  bool force = false;
};

int cmd_compose(const ComposeOptions& o, std::ostream& out, std::ostream& err);

struct FuzzOptions {
  std::vector<std::filesystem::path> config_paths;
  std::filesystem::path shared_dir;  // WEBPHUZZ_SHARED_DIR when empty
  std::size_t instances = 1;
  std::optional<double> timeout_s;
  std::optional<double> duration_s;
  std::uint64_t max_candidates = 0;
  // Stop once alerts cover these classes; "all" means every class.
  std::vector<std::string> stop_after;
  std::string policy = "param_based";
  std::string selection = "coverage";
  bool xss_respect_content_type = false;
  std::filesystem::path report_path;
  std::filesystem::path trace_path;
  std::filesystem::path login_dir = "login";
  std::uint64_t seed = 0;
  std::string instance_prefix;  // hostname when empty
  std::uint32_t feedback_wait_ms = 2000;
  double request_timeout_s = 30.0;
  bool sync = true;
};

int cmd_fuzz(const FuzzOptions& o, std::ostream& out, std::ostream& err,
             const std::atomic<bool>* cancel = nullptr);

struct WpextOptions {
  std::filesystem::path plugin_dir;
  std::filesystem::path out_dir;
  std::string base_url = "http://web";
  std::string login_profile = "wordpress";
  bool force = false;
};

int cmd_wpext(const WpextOptions& o, std::ostream& out, std::ostream& err);

struct MockTargetOptions {
  std::filesystem::path shared_dir;
  int port = 8080;
  std::size_t threads = 16;
};

// Serves until `stop` becomes true.
int cmd_mock_target(const MockTargetOptions& o, std::ostream& out, std::ostream& err,
                    const std::atomic<bool>& stop);

// Parses argv and dispatches; what `main` calls.
int run(int argc, char** argv);

}  // namespace webphuzz::cli
