#include <random>

#include "detection_matrix.hpp"
#include "doctest.h"
#include "support.hpp"
#include "webphuzz/detection.hpp"
#include "webphuzz/hooks.hpp"

using namespace webphuzz;
using namespace webphuzz::detect;
using webphuzz::testing::make_candidate;
using webphuzz::testing::mock_config;

namespace {

ParamKey q(const char* name) { return {ParamLocation::query, name}; }

// Oracle for value_flows: scan every occurrence by brute force.
bool flows_oracle(const std::string& value, const std::string& arg, std::size_t min_len) {
  if (value.empty()) return false;
  auto word = [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'; };
  for (std::size_t i = 0; i + value.size() <= arg.size(); ++i) {
    if (arg.compare(i, value.size(), value) != 0) continue;
    if (value.size() >= min_len) return true;
    bool left = i == 0 || !(word(arg[i - 1]) && word(value.front()));
    bool right = i + value.size() == arg.size() || !(word(arg[i + value.size()]) && word(value.back()));
    if (left && right) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("detection example matrix") {
  for (const auto& row : testing::detection_matrix()) {
    INFO(row.name << ": " << row.detail);
    CHECK(row.pass);
  }
}

TEST_CASE("param_based alerts are a subset of default alerts") {
  auto r = testing::filter_property(10000, 99);
  CHECK(r.records == 10000);
  CHECK(r.violations == 0);
  CHECK(r.param_based_alerts > 100);
  CHECK(r.default_alerts > r.param_based_alerts);
}

TEST_CASE("value_flows") {
  CHECK(value_flows("1", "id = 1", 4));
  CHECK_FALSE(value_flows("1", "id = 10", 4));
  CHECK(value_flows("1'", "id = 1'", 4));
  CHECK(value_flows("fuzz", "xfuzzx", 4));
  CHECK_FALSE(value_flows("", "anything", 4));
  CHECK_FALSE(value_flows("ab", "cab", 4));
  CHECK(value_flows("ab", "c ab", 4));

  std::mt19937_64 rng(17);
  const std::string alphabet = "ab1 '_-";
  for (int i = 0; i < 20000; ++i) {
    std::string v(rng() % 5, 'a'), arg(rng() % 12, 'a');
    for (auto& ch : v) ch = alphabet[rng() % alphabet.size()];
    for (auto& ch : arg) ch = alphabet[rng() % alphabet.size()];
    auto min_len = 1 + rng() % 5;
    CHECK(value_flows(v, arg, min_len) == flows_oracle(v, arg, min_len));
  }
}

TEST_CASE("param_flow ignores fixed and login parameters") {
  EndpointConfig cfg = *mock_config();
  cfg.param_groups[ParamLocation::query].params[0].mode = ParamMode::fixed;
  auto c = make_candidate(std::make_shared<const EndpointConfig>(cfg), {{q("m"), "mssss"}, {q("d"), "dddd"}});
  c.values[{ParamLocation::cookie, "PHPSESSID"}] = "sess";
  auto flow = param_flow(c, {"mssss dddd sess"}, {});
  REQUIRE(flow.size() == 1);
  CHECK(flow[0].name == "d");
}

TEST_CASE("xss only counts executable contexts and xss markers") {
  auto c = make_candidate(mock_config(), {{q("m"), "mx"}, {q("d"), "v"}});
  c.markers.push_back({"fz01234567", MarkerClass::xss, q("d")});
  c.response = ResponseSummary{200, {}, "<a title=\"fz01234567\">", false};
  CHECK(check_xss(c).empty());
  c.response->body = "<a onclick=\"fz01234567()\">";
  CHECK(check_xss(c).size() == 1);
  c.markers[0].vuln_class = MarkerClass::patr;
  CHECK(check_xss(c).empty());
}

TEST_CASE("opre prefix and absolute forms") {
  auto redirect = [](const std::string& d, const std::string& location) {
    auto c = make_candidate(mock_config(), {{q("m"), "mo"}, {q("d"), d}});
    c.response = ResponseSummary{301, {{"location", location}}, "", false};
    return check_opre(c);
  };
  CHECK(redirect("//evil.example", "//evil.example/path").size() == 1);
  CHECK(redirect("https://evil", "/go?u=https://evil").size() == 1);
  CHECK(redirect("abc", "abc").empty());  // shorter than the match length
}

TEST_CASE("shell patterns are configurable") {
  auto c = make_candidate(mock_config(), {{q("m"), "mr"}, {q("d"), "zzzz"}});
  FeedbackRecord fb;
  fb.hook_events.push_back({"system", {"echo zzzz"}, "custom failure", std::nullopt, false});
  CHECK(check_rce(fb, c, {}).empty());
  VulnCheckPolicy p;
  p.shell_error_patterns.push_back("CUSTOM FAIL");
  CHECK(check_rce(fb, c, p).size() == 1);
}

TEST_CASE("alert keys") {
  VulnAlert a;
  a.vuln_class = VulnClass::sqli;
  a.evidence = HookEvent{"MySQLi_Query", {}, std::nullopt, std::nullopt, false};
  a.matched_params = {{ParamLocation::query, "d", "x"}, {ParamLocation::body, "a", "y"}};
  CHECK(alert_key(a) == "sqli|mysqli_query|body:a|query:d");
  a.evidence = ResponseExcerpt{};
  a.matched_params.clear();
  CHECK(alert_key(a) == "sqli|response");
}

TEST_CASE("hook inventory") {
  CHECK(hooks::group_of("MYSQLI_QUERY") == hooks::HookGroup::sqli);
  CHECK(hooks::group_of("file_get_contents") == hooks::HookGroup::patr);
  CHECK(hooks::group_of("strlen") == std::nullopt);
  CHECK(hooks::functions(hooks::HookGroup::patr).size() == 48);
  CHECK(hooks::in_group("DOMDocument::loadXML", hooks::HookGroup::xxe));
}

TEST_CASE("check modes parse") {
  CHECK(parse_check_mode("param_based") == CheckMode::param_based);
  CHECK(parse_check_mode("default") == CheckMode::default_mode);
  CHECK_FALSE(parse_check_mode("strict"));
}
