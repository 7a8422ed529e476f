#include "commands.hpp"

#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "webphuzz/campaign.hpp"
#include "webphuzz/compose.hpp"
#include "webphuzz/config.hpp"
#include "webphuzz/error.hpp"
#include "webphuzz/har.hpp"
#include "webphuzz/mock_target.hpp"
#include "webphuzz/wordpress.hpp"

namespace fs = std::filesystem;

namespace webphuzz::cli {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

// Output directories are only reused with --force.
void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    if (!force && !fs::is_empty(dir)) throw IoError(dir.string() + " is not empty (use --force to overwrite)");
  }
  fs::create_directories(dir);
}

std::string hostname_or(std::string fallback) {
  char buf[256] = {};
  if (gethostname(buf, sizeof buf - 1) == 0 && buf[0]) return buf;
  return fallback;
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

}  // namespace

int cmd_hargen(const HargenOptions& o, std::ostream& out, std::ostream& err) {
  har::ParseResult parsed;
  try {
    parsed = har::parse_har(read_file(o.har_path));
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& w : parsed.warnings) err << "warning: " << w << '\n';

  auto filtered = har::filter_endpoints(parsed.requests);
  har::Markings markings;
  markings.fixed_regex = o.fixed_regex;
  if (o.session_regex) markings.session_regex = *o.session_regex;

  try {
    prepare_out_dir(o.out_dir, o.force);
    std::size_t written = 0;
    for (const auto& ep : filtered.endpoints) {
      auto name = har::endpoint_slug(ep) + ".json";
      config::save_config(o.out_dir / name, har::to_fuzzer_config(ep, markings));
      out << "  kept  " << std::left << std::setw(7) << to_string(ep.method) << ep.target << "  -> " << name
          << '\n';
      ++written;
    }
    out << "entries: " << parsed.requests.size() + parsed.warnings.size()
        << "  skipped: " << parsed.warnings.size() << "  static: " << filtered.dropped_static
        << "  merged: " << filtered.merged << "  configs: " << written << '\n';
    if (written == 0) err << "warning: no endpoints left after filtering\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cmd_compose(const ComposeOptions& o, std::ostream& out, std::ostream& err) {
  try {
    std::vector<compose::CampaignConfig> configs;
    for (const auto& p : o.config_paths) configs.push_back({p, config::load_config(p)});
    compose::ComposeOptions co;
    co.instances = o.instances;
    co.coverage_driver = o.coverage_driver;
    co.policy = o.policy;
    co.app_source = o.app_source;
    co.wp_overrides = o.wp_overrides;
    auto yaml = compose::emit_compose(configs, co);
    if (fs::exists(o.out_path) && !o.force)
      throw IoError(o.out_path.string() + " exists (use --force to overwrite)");
    if (o.out_path.has_parent_path()) fs::create_directories(o.out_path.parent_path());
    write_file(o.out_path, yaml);
    out << "wrote " << o.out_path.string() << " (" << configs.size() << " fuzzer service"
        << (configs.size() == 1 ? "" : "s") << ", " << o.instances << " instance"
        << (o.instances == 1 ? "" : "s") << " each)\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

int cmd_fuzz(const FuzzOptions& o, std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
  campaign::CampaignOptions co;
  try {
    for (const auto& p : o.config_paths)
      co.configs.push_back(std::make_shared<const EndpointConfig>(config::load_config(p)));
    auto mode = detect::parse_check_mode(o.policy);
    if (!mode) throw ConfigError("unknown policy '" + o.policy + "'");
    co.policy.mode = *mode;
    co.policy.xss_respect_content_type = o.xss_respect_content_type;
    if (o.selection == "coverage")
      co.strategy = sched::SelectionStrategy::coverage_guided;
    else if (o.selection == "random")
      co.strategy = sched::SelectionStrategy::random;
    else
      throw ConfigError("unknown selection strategy '" + o.selection + "'");
    for (const auto& name : o.stop_after) {
      if (name == "all") {
        co.stop_after_classes.insert(std::begin(kAllVulnClasses), std::end(kAllVulnClasses));
      } else if (auto cls = parse_vuln_class(name)) {
        co.stop_after_classes.insert(*cls);
      } else {
        throw ConfigError("unknown vulnerability class '" + name + "'");
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  co.shared_dir = o.shared_dir;
  if (co.shared_dir.empty()) {
    if (const char* env = std::getenv("WEBPHUZZ_SHARED_DIR")) co.shared_dir = env;
  }
  if (co.shared_dir.empty()) {
    err << "error: no shared directory (--shared-dir or WEBPHUZZ_SHARED_DIR)\n";
    return 1;
  }
  co.instances = o.instances;
  co.instance_prefix = o.instance_prefix.empty() ? hostname_or("fuzzer") : o.instance_prefix;
  co.timeout_s = o.timeout_s;
  co.duration_s = o.duration_s;
  co.max_candidates = o.max_candidates;
  co.seed = o.seed;
  co.feedback_wait = std::chrono::milliseconds(o.feedback_wait_ms);
  co.request_timeout_s = o.request_timeout_s;
  co.sync = o.sync;
  co.report_path = o.report_path;
  co.trace_path = o.trace_path;
  co.login_dir = o.login_dir;
  co.cancel = cancel;

  auto result = campaign::run_campaign(co);
  const auto& s = result.stats;
  for (const auto& a : result.alerts) {
    out << "[" << to_string(a.alert.vuln_class) << "] " << to_string(a.method) << ' ' << a.request_url << "  ("
        << to_string(a.alert.confidence) << ")\n";
  }
  out << "requests: " << s.requests_sent << "  exec/s: " << std::fixed << std::setprecision(1) << s.exec_per_sec()
      << "  coverage: " << s.coverage_lines << " lines in " << s.coverage_files << " files"
      << "  feedback missing: " << s.feedback_missing << "  alerts: " << result.alerts.size() << '\n';
  if (result.fatal) err << "error: " << *result.fatal << '\n';
  return result.exit_code();
}

int cmd_wpext(const WpextOptions& o, std::ostream& out, std::ostream& err) {
  try {
    if (!fs::is_directory(o.plugin_dir)) throw IoError("cannot read directory " + o.plugin_dir.string());
    auto ex = wp::extract_wp_endpoints(o.plugin_dir);
    for (const auto& w : ex.warnings) err << "warning: " << w << '\n';
    prepare_out_dir(o.out_dir, o.force);
    wp::WpConfigOptions wo;
    wo.base_url = o.base_url;
    wo.login_profile = o.login_profile;
    for (const auto& ep : ex.endpoints) {
      auto name = ep.api_name + ".json";
      config::save_config(o.out_dir / name, wp::to_fuzzer_config(ep, wo));
      out << "  " << (ep.privileged ? "priv  " : "nopriv") << "  " << ep.api_name << "  -> " << name << '\n';
    }
    write_file(o.out_dir / "endpoints.csv", wp::to_csv(ex));
    out << "apis: " << ex.endpoints.size() << "  handlers not found: " << ex.warnings.size() << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

int cmd_mock_target(const MockTargetOptions& o, std::ostream& out, std::ostream& err,
                    const std::atomic<bool>& stop) {
  try {
    mock::MockServer server(o.shared_dir, o.port, o.threads);
    server.start();
    out << "serving " << server.origin() << mock::kPath << "  feedback: " << o.shared_dir.string() << std::endl;
    while (!stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    out << "served " << server.requests_served() << " requests\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, char** argv) {
  CLI::App app{"webphuzz: coverage-guided fuzzer for PHP web applications"};
  app.require_subcommand(1);

  HargenOptions hargen;
  auto* hg = app.add_subcommand("hargen", "Derive fuzzer configs from a HAR capture");
  hg->add_option("har", hargen.har_path, "HAR file")->required()->check(CLI::ExistingFile);
  hg->add_option("out_dir", hargen.out_dir, "Directory for the config files")->required();
  hg->add_option("--fixed-regex", hargen.fixed_regex, "Names matching these are never fuzzed");
  hg->add_option("--session-regex", hargen.session_regex, "Cookie names treated as login session");
  hg->add_flag("--force", hargen.force, "Overwrite a non-empty output directory");

  ComposeOptions comp;
  auto* cg = app.add_subcommand("compose", "Write a docker-compose file for a campaign");
  cg->add_option("configs", comp.config_paths, "Fuzzer config files")->required();
  cg->add_option("-o,--out", comp.out_path, "Output file")->default_val("docker-compose.yml");
  cg->add_option("--instances", comp.instances, "Fuzzer instances per config")->default_val(1);
  cg->add_option("--coverage-driver", comp.coverage_driver)->check(CLI::IsMember({"xdebug", "pcov"}));
  cg->add_option("--policy", comp.policy)->check(CLI::IsMember({"param_based", "default"}));
  cg->add_option("--app", comp.app_source, "Application source mounted as document root");
  cg->add_flag("--wp-overrides", comp.wp_overrides, "Force WordPress auth checks to pass");
  cg->add_flag("--force", comp.force, "Overwrite an existing output file");

  FuzzOptions fuzz;
  auto* fz = app.add_subcommand("fuzz", "Run a fuzzing campaign");
  fz->add_option("--config", fuzz.config_paths, "Fuzzer config file(s)")->required();
  fz->add_option("--shared-dir", fuzz.shared_dir, "Directory the target writes feedback files to");
  fz->add_option("--instances", fuzz.instances, "Worker loops")->default_val(1)->check(CLI::PositiveNumber);
  fz->add_option("--timeout-s", fuzz.timeout_s, "Fuzzing time per config (default: the config's timeout, 300)");
  fz->add_option("--duration-s", fuzz.duration_s, "Wall-clock limit for the whole campaign");
  fz->add_option("--max-candidates", fuzz.max_candidates, "Candidates per worker (0 = unlimited)");
  fz->add_option("--stop-after", fuzz.stop_after, "Stop once these classes (or 'all') were reported")->delimiter(',');
  fz->add_option("--policy", fuzz.policy)->check(CLI::IsMember({"param_based", "default"}));
  fz->add_option("--selection", fuzz.selection, "coverage or random")->check(CLI::IsMember({"coverage", "random"}));
  fz->add_flag("--xss-respect-content-type", fuzz.xss_respect_content_type, "Ignore XSS markers in non-HTML responses");
  fz->add_option("--report", fuzz.report_path, "JSONL report");
  fz->add_option("--trace", fuzz.trace_path, "Evaluated candidates, one per line");
  fz->add_option("--login-dir", fuzz.login_dir, "Directory of login profiles");
  fz->add_option("--seed", fuzz.seed, "RNG seed");
  fz->add_option("--instance-id", fuzz.instance_prefix, "Instance id prefix (default: hostname)");
  fz->add_option("--feedback-wait-ms", fuzz.feedback_wait_ms, "How long to wait for a feedback file");
  fz->add_option("--request-timeout-s", fuzz.request_timeout_s, "HTTP timeout per request");
  fz->add_flag("!--no-sync", fuzz.sync, "Do not share coverage with other instances");

  WpextOptions wpext;
  auto* wg = app.add_subcommand("wpext", "Extract AJAX endpoints from a WordPress plugin");
  wg->add_option("plugin_dir", wpext.plugin_dir, "Plugin source directory")->required();
  wg->add_option("out_dir", wpext.out_dir, "Directory for configs and endpoints.csv")->required();
  wg->add_option("--base-url", wpext.base_url, "WordPress origin");
  wg->add_option("--login-profile", wpext.login_profile, "Profile for privileged APIs");
  wg->add_flag("--force", wpext.force, "Overwrite a non-empty output directory");

  MockTargetOptions mockt;
  auto* mt = app.add_subcommand("mock-target", "Serve the built-in vulnerable test target");
  mt->add_option("--shared-dir", mockt.shared_dir, "Feedback directory")->required();
  mt->add_option("--port", mockt.port, "TCP port on 127.0.0.1 (0 = any)");
  mt->add_option("--threads", mockt.threads, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  if (*hg) return cmd_hargen(hargen, std::cout, std::cerr);
  if (*cg) return cmd_compose(comp, std::cout, std::cerr);
  if (*wg) return cmd_wpext(wpext, std::cout, std::cerr);
  install_signal_handlers();
  if (*fz) return cmd_fuzz(fuzz, std::cout, std::cerr, &g_interrupted);
  return cmd_mock_target(mockt, std::cout, std::cerr, g_interrupted);
}

}  // namespace webphuzz::cli
