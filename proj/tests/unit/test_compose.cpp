#include <yaml-cpp/yaml.h>

#include "doctest.h"
#include "support.hpp"
#include "webphuzz/compose.hpp"
#include "webphuzz/config.hpp"
#include "webphuzz/error.hpp"

using namespace webphuzz;
using namespace webphuzz::compose;
using webphuzz::testing::fixture;

namespace {

CampaignConfig listing5(const std::string& path = "configs/exec.json") {
  return {path, config::load_config(fixture("listing5.json"))};
}

}  // namespace

TEST_CASE("one config, ten instances") {
  ComposeOptions o;
  o.instances = 10;
  auto doc = YAML::Load(emit_compose({listing5()}, o));
  auto services = doc["services"];
  REQUIRE(services["fuzzer"]);
  CHECK(services["fuzzer"]["deploy"]["replicas"].as<int>() == 10);
  CHECK(services["web"]["environment"]["FUZZ_SHARED_DIR"].as<std::string>() == "/shared");
  CHECK(services["web"]["environment"]["FUZZ_COVERAGE_DRIVER"].as<std::string>() == "xdebug");
  CHECK(services["web"]["environment"]["FUZZ_WP_OVERRIDES"].as<std::string>() == "0");
  CHECK(doc["volumes"]["shared"]["driver_opts"]["type"].as<std::string>() == "tmpfs");
  auto cmd = services["fuzzer"]["command"];
  CHECK(cmd[0].as<std::string>() == "fuzz");
  CHECK(cmd[2].as<std::string>() == "/configs/exec.json");
}

TEST_CASE("two configs share one volume") {
  auto second = listing5("configs/other.json");
  second.config.coverage_path_constraint = "/var/www/html/vulnerabilities/";
  auto doc = YAML::Load(emit_compose({listing5(), second}));
  auto services = doc["services"];
  REQUIRE(services["fuzzer-1"]);
  REQUIRE(services["fuzzer-2"]);
  CHECK(services["fuzzer-1"]["volumes"][1].as<std::string>() == "shared:/shared");
  CHECK(services["fuzzer-2"]["volumes"][1].as<std::string>() == "shared:/shared");
  CHECK(services["web"]["environment"]["FUZZ_COVERAGE_PATHS"].as<std::string>() == "/var/www/html/vulnerabilities/");
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(emit_compose({}), EmptyCampaign);
  ComposeOptions o;
  o.instances = 0;
  CHECK_THROWS_AS(emit_compose({listing5()}, o), ConfigError);
}
