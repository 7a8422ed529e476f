#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "webphuzz/model.hpp"

namespace webphuzz::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path fixture(const std::string& name);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// GET <origin>/vuln with query params m and d, both fuzzed from "fuzz".
std::shared_ptr<const EndpointConfig> mock_config(const std::string& origin = "http://127.0.0.1:1");

Candidate make_candidate(std::shared_ptr<const EndpointConfig> cfg,
                         std::initializer_list<std::pair<ParamKey, std::string>> values);

}  // namespace webphuzz::testing
