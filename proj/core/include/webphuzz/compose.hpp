#pragma once

// docker-compose (v3) file for a campaign: the instrumented web server, its
// database, one fuzzer service per config and a tmpfs volume they share.

#include <filesystem>
#include <string>
#include <vector>

#include "webphuzz/model.hpp"

namespace webphuzz::compose {

struct CampaignConfig {
  std::filesystem::path path;  // config file as seen on the host
  EndpointConfig config;
};

struct ComposeOptions {
  int instances = 1;  // replicas per fuzzer service
  std::string web_image = "webphuzz/php-shim:latest";
  std::string db_image = "mysql:8.0";
  std::string fuzzer_image = "webphuzz/fuzzer:latest";
  std::string app_source = "./app";  // mounted as the DocumentRoot
  std::string document_root = "/var/www/html";
  std::string shared_mount = "/shared";
  std::string config_mount = "/configs";
  std::string coverage_driver = "xdebug";
  std::string policy = "param_based";
  bool wp_overrides = false;
};

// Throws EmptyCampaign when `configs` is empty, ConfigError when instances < 1.
std::string emit_compose(const std::vector<CampaignConfig>& configs, const ComposeOptions& options = {});

}  // namespace webphuzz::compose
