#include "webphuzz/compose.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <set>
#include <sstream>

#include "webphuzz/error.hpp"

namespace webphuzz::compose {

namespace {

std::string number_text(double v) {
  if (std::floor(v) == v) return std::to_string(static_cast<long long>(v));
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

}  // namespace

std::string emit_compose(const std::vector<CampaignConfig>& configs, const ComposeOptions& options) {
  if (configs.empty()) throw EmptyCampaign();
  if (options.instances < 1) throw ConfigError("instances must be at least 1");

  // Coverage is constrained to the union of the configs' prefixes.
  std::set<std::string> coverage_paths;
  for (const auto& c : configs) {
    if (c.config.coverage_path_constraint) coverage_paths.insert(*c.config.coverage_path_constraint);
  }
  std::string coverage_env;
  for (const auto& p : coverage_paths) coverage_env += (coverage_env.empty() ? "" : ":") + p;

  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "version" << YAML::Value << YAML::DoubleQuoted << "3.8";
  out << YAML::Key << "services" << YAML::Value << YAML::BeginMap;

  out << YAML::Key << "web" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "image" << YAML::Value << options.web_image;
  out << YAML::Key << "volumes" << YAML::Value << YAML::BeginSeq
      << (options.app_source + ":" + options.document_root) << ("shared:" + options.shared_mount) << YAML::EndSeq;
  out << YAML::Key << "environment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "FUZZ_SHARED_DIR" << YAML::Value << options.shared_mount;
  out << YAML::Key << "FUZZ_COVERAGE_DRIVER" << YAML::Value << options.coverage_driver;
  out << YAML::Key << "FUZZ_COVERAGE_PATHS" << YAML::Value << YAML::DoubleQuoted << coverage_env;
  out << YAML::Key << "FUZZ_WP_OVERRIDES" << YAML::Value << YAML::DoubleQuoted << (options.wp_overrides ? "1" : "0");
  out << YAML::EndMap;
  out << YAML::Key << "depends_on" << YAML::Value << YAML::Flow << YAML::BeginSeq << "db" << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "db" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "image" << YAML::Value << options.db_image;
  out << YAML::Key << "environment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "MYSQL_ROOT_PASSWORD" << YAML::Value << "fuzz";
  out << YAML::Key << "MYSQL_DATABASE" << YAML::Value << "app";
  out << YAML::EndMap;
  out << YAML::EndMap;

  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& c = configs[i];
    auto name = configs.size() == 1 ? std::string("fuzzer") : "fuzzer-" + std::to_string(i + 1);
    auto file = c.path.filename().string();
    auto config_dir = c.path.has_parent_path() ? c.path.parent_path().string() : std::string(".");

    out << YAML::Key << name << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "image" << YAML::Value << options.fuzzer_image;
    out << YAML::Key << "command" << YAML::Value << YAML::Flow << YAML::BeginSeq << "fuzz"
        << "--config" << (options.config_mount + "/" + file) << "--policy" << options.policy << YAML::EndSeq;
    out << YAML::Key << "volumes" << YAML::Value << YAML::BeginSeq << (config_dir + ":" + options.config_mount + ":ro")
        << ("shared:" + options.shared_mount) << YAML::EndSeq;
    out << YAML::Key << "environment" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "WEBPHUZZ_SHARED_DIR" << YAML::Value << options.shared_mount;
    out << YAML::Key << "WEBPHUZZ_TIMEOUT_S" << YAML::Value << YAML::DoubleQuoted << number_text(c.config.timeout_s);
    out << YAML::Key << "WEBPHUZZ_COVERAGE_PATH_CONSTRAINT" << YAML::Value << YAML::DoubleQuoted
        << c.config.coverage_path_constraint.value_or("");
    out << YAML::EndMap;
    out << YAML::Key << "deploy" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "replicas" << YAML::Value << options.instances;
    out << YAML::EndMap;
    out << YAML::Key << "depends_on" << YAML::Value << YAML::Flow << YAML::BeginSeq << "web" << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;  // services

  out << YAML::Key << "volumes" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "shared" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "driver" << YAML::Value << "local";
  out << YAML::Key << "driver_opts" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "type" << YAML::Value << "tmpfs";
  out << YAML::Key << "device" << YAML::Value << "tmpfs";
  out << YAML::EndMap;
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::EndMap;
  if (!out.good()) throw Error("YamlError", out.GetLastError());
  return std::string(out.c_str()) + "\n";
}

}  // namespace webphuzz::compose
