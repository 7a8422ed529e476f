#include <set>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "support.hpp"
#include "webphuzz/campaign.hpp"
#include "webphuzz/mock_target.hpp"
#include "webphuzz/store.hpp"

using namespace webphuzz;
using namespace webphuzz::campaign;
using webphuzz::testing::mock_config;
using webphuzz::testing::read_text;
using webphuzz::testing::TempDir;

namespace {

CampaignOptions in_process(const std::filesystem::path& dir, std::uint64_t seed) {
  CampaignOptions o;
  o.configs = {mock_config()};
  o.shared_dir = dir;
  o.seed = seed;
  o.timeout_s = 600;
  o.feedback_wait = std::chrono::milliseconds(200);
  o.transport = [dir](const std::string&) { return std::make_unique<mock::InProcessTransport>(dir); };
  return o;
}

}  // namespace

TEST_CASE("in-process campaign finds every class") {
  TempDir dir("camp");
  auto o = in_process(dir.path(), 7);
  o.stop_after_classes = {std::begin(kAllVulnClasses), std::end(kAllVulnClasses)};
  o.max_candidates = 50000;
  o.report_path = dir / "report.jsonl";
  auto r = run_campaign(o);
  REQUIRE_FALSE(r.fatal);
  CHECK(r.classes() == o.stop_after_classes);
  CHECK(r.exit_code() == 2);
  CHECK(r.stats.coverage_lines == 18);
  CHECK(r.stats.feedback_missing == 0);

  // one line per alert plus the closing stats line, info lines in between
  auto report = read_text(o.report_path);
  std::size_t alerts = 0, stats = 0;
  std::istringstream in(report);
  for (std::string line; std::getline(in, line);) {
    alerts += line.find("\"type\":\"alert\"") != std::string::npos;
    stats += line.find("\"type\":\"stats\"") != std::string::npos;
  }
  CHECK(alerts == r.alerts.size());
  CHECK(stats == 1);
}

TEST_CASE("same seed, same campaign") {
  TempDir a("camp"), b("camp");
  auto oa = in_process(a.path(), 11);
  auto ob = in_process(b.path(), 11);
  oa.max_candidates = ob.max_candidates = 400;
  oa.trace_path = a / "trace.tsv";
  ob.trace_path = b / "trace.tsv";
  auto ra = run_campaign(oa);
  auto rb = run_campaign(ob);
  REQUIRE_FALSE(ra.fatal);
  CHECK(ra.workers[0].evaluated.size() == 400);
  CHECK(ra.workers[0].evaluated == rb.workers[0].evaluated);
  CHECK(read_text(oa.trace_path) == read_text(ob.trace_path));
  REQUIRE(ra.alerts.size() == rb.alerts.size());
  for (std::size_t i = 0; i < ra.alerts.size(); ++i) CHECK(alert_json(ra.alerts[i], false) == alert_json(rb.alerts[i], false));

  TempDir c("camp");
  auto oc = in_process(c.path(), 12);
  oc.max_candidates = 400;
  CHECK(run_campaign(oc).workers[0].evaluated != ra.workers[0].evaluated);
}

TEST_CASE("observer sees each evaluated candidate once") {
  TempDir dir("camp");
  auto o = in_process(dir.path(), 3);
  o.max_candidates = 200;
  std::vector<std::string> seen;
  o.observer = [&](std::size_t worker, const Candidate& c, const FeedbackRecord& fb) {
    CHECK(worker == 0);
    CHECK(fb.id == c.feedback_id);
    seen.push_back(candidate_hash(c));
  };
  auto r = run_campaign(o);
  CHECK(seen == r.workers[0].evaluated);
  CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == seen.size());
}

TEST_CASE("random selection runs") {
  TempDir dir("camp");
  auto o = in_process(dir.path(), 5);
  o.strategy = sched::SelectionStrategy::random;
  o.max_candidates = 300;
  auto r = run_campaign(o);
  REQUIRE_FALSE(r.fatal);
  CHECK(r.stats.candidates_evaluated == 300);
}

TEST_CASE("parallel instances share hashes") {
  TempDir dir("camp");
  auto o = in_process(dir.path(), 9);
  o.instances = 4;
  o.max_candidates = 150;
  auto r = run_campaign(o);
  REQUIRE_FALSE(r.fatal);
  REQUIRE(r.workers.size() == 4);
  std::set<std::string> names;
  for (const auto& w : r.workers) {
    names.insert(w.instance);
    CHECK(w.stats.candidates_evaluated == 150);
  }
  CHECK(names == std::set<std::string>{"fuzzer-0", "fuzzer-1", "fuzzer-2", "fuzzer-3"});

  // after the fact every instance resumes into the same union
  std::set<std::string> all;
  for (const auto& w : r.workers) all.insert(w.evaluated.begin(), w.evaluated.end());
  for (const auto& w : r.workers) {
    GlobalCoverageStore s(dir / "sync", w.instance);
    s.sync();
    CHECK(std::set<std::string>(s.seen_hashes().begin(), s.seen_hashes().end()) == all);
  }
}

TEST_CASE("cancel flag stops the campaign") {
  TempDir dir("camp");
  auto o = in_process(dir.path(), 1);
  std::atomic<bool> cancel{true};
  o.cancel = &cancel;
  auto r = run_campaign(o);
  CHECK_FALSE(r.fatal);
  CHECK(r.stats.candidates_evaluated == 0);
  CHECK(r.exit_code() == 0);
}

TEST_CASE("wall-clock budget") {
  TempDir dir("camp");
  auto o = in_process(dir.path(), 1);
  o.duration_s = 0.5;
  auto r = run_campaign(o);
  CHECK_FALSE(r.fatal);
  CHECK(r.stats.elapsed_s < 5.0);
  CHECK(r.stats.candidates_evaluated > 0);
}

TEST_CASE("alerts are kept apart per endpoint") {
  TempDir dir("camp");
  auto o = in_process(dir.path(), 2);
  EndpointConfig other = *mock_config();
  other.target_url = "http://127.0.0.1:1/vuln.php";
  // Same script, so coverage is already saturated; the seed has to hit the sink.
  other.param_groups[ParamLocation::query].params[0].seeds = {"ms"};
  other.param_groups[ParamLocation::query].params[1].seeds = {"1'"};
  o.configs.push_back(std::make_shared<const EndpointConfig>(other));
  o.timeout_s = 1.0;
  auto r = run_campaign(o);
  REQUIRE_FALSE(r.fatal);
  std::set<std::string> sqli_urls;
  for (const auto& a : r.alerts)
    if (a.alert.vuln_class == VulnClass::sqli) sqli_urls.insert(a.request_url.substr(0, a.request_url.find('?')));
  CHECK(sqli_urls == std::set<std::string>{"http://127.0.0.1:1/vuln", "http://127.0.0.1:1/vuln.php"});
}

TEST_CASE("fatal conditions") {
  TempDir dir("camp");
  SUBCASE("no configs") {
    CampaignOptions o;
    o.shared_dir = dir.path();
    auto r = run_campaign(o);
    CHECK(r.fatal);
    CHECK(r.exit_code() == 1);
  }
  SUBCASE("unreachable target") {
    CampaignOptions o;
    o.configs = {mock_config("http://127.0.0.1:1")};
    o.shared_dir = dir.path();
    o.retry = {2, std::chrono::milliseconds(1)};
    o.request_timeout_s = 1;
    o.duration_s = 5;
    auto r = run_campaign(o);
    REQUIRE(r.fatal);
    CHECK(r.fatal->find("unreachable") != std::string::npos);
    CHECK(r.exit_code() == 1);
  }
  SUBCASE("config without fuzz params") {
    EndpointConfig cfg = *mock_config();
    for (auto& p : cfg.param_groups[ParamLocation::query].params) p.mode = ParamMode::fixed;
    auto o = in_process(dir.path(), 1);
    o.configs = {std::make_shared<const EndpointConfig>(cfg)};
    auto r = run_campaign(o);
    CHECK(r.fatal);
  }
}

TEST_CASE("alert lines") {
  ReportedAlert a;
  a.alert.vuln_class = VulnClass::sqli;
  a.alert.candidate_hash = std::string(64, 'a');
  a.alert.evidence = HookEvent{"mysqli_query", {"q"}, std::string("err"), std::nullopt, true};
  a.alert.matched_params = {{ParamLocation::query, "d", "1'"}};
  a.instance = "fuzzer-0";
  a.request_url = "http://h/vuln?d=1%27";
  auto without = alert_json(a, false);
  CHECK(without.find("\"time\"") == std::string::npos);
  CHECK(without.find("\"class\":\"sqli\"") != std::string::npos);
  CHECK(without.find("\"function\":\"mysqli_query\"") != std::string::npos);
  CHECK(alert_json(a).find("\"time\":\"") != std::string::npos);
}
