#include "support.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace webphuzz::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("webphuzz-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(WEBPHUZZ_FIXTURE_DIR) / name; }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::shared_ptr<const EndpointConfig> mock_config(const std::string& origin) {
  EndpointConfig cfg;
  cfg.target_url = origin + "/vuln";
  cfg.methods = {HttpMethod::GET};
  ParamGroup g;
  g.fuzz_patterns = {".*"};
  g.weight = 1.0;
  g.params = {{"m", {"fuzz"}, ParamMode::fuzz, ParamLocation::query},
              {"d", {"fuzz"}, ParamMode::fuzz, ParamLocation::query}};
  cfg.param_groups[ParamLocation::query] = g;
  return std::make_shared<const EndpointConfig>(cfg);
}

Candidate make_candidate(std::shared_ptr<const EndpointConfig> cfg,
                         std::initializer_list<std::pair<ParamKey, std::string>> values) {
  Candidate c;
  c.endpoint = std::move(cfg);
  c.method = c.endpoint->methods.front();
  for (const auto& [k, v] : values) c.values[k] = v;
  return c;
}

}  // namespace webphuzz::testing
