// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "commands.hpp"
#include "detection_matrix.hpp"
#include "json.hpp"
#include "support.hpp"
#include "webphuzz/campaign.hpp"
#include "webphuzz/config.hpp"
#include "webphuzz/har.hpp"
#include "webphuzz/mock_target.hpp"
#include "webphuzz/mutation.hpp"
#include "webphuzz/scheduler.hpp"
#include "webphuzz/store.hpp"

using namespace webphuzz;
using webphuzz::testing::fixture;
using webphuzz::testing::mock_config;
using webphuzz::testing::read_text;
using webphuzz::testing::TempDir;
using json = nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kDiscoveryWallClockS = 120.0;
constexpr std::uint64_t kDiscoveryCandidates = 50000;
constexpr int kGuidanceRuns = 20;
constexpr double kGuidanceMinFullRate = 0.95;
constexpr std::uint64_t kGuidanceBudget = kDiscoveryCandidates;
constexpr int kRateDraws = 100000;
constexpr double kRateTolerance = 0.005;
constexpr int kScoreInstances = 1000;
constexpr int kSyncWorkers = 10;
constexpr std::uint64_t kSyncCandidates = 500;
constexpr std::size_t kFilterRecords = 10000;
constexpr std::uint64_t kDeterminismCandidates = 2000;
constexpr std::size_t kHarEntries = 12, kHarStatic = 4, kHarConfigs = 8;

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

template <typename F>
void criterion(const std::string& name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

std::set<std::string> all_class_names() {
  std::set<std::string> out;
  for (auto c : kAllVulnClasses) out.insert(std::string(to_string(c)));
  return out;
}

// --- 1 ----------------------------------------------------------------------

void end_to_end_discovery() {
  const std::string name = "end-to-end discovery (all 7 classes over HTTP)";
  criterion(name, [&] {
    TempDir dir("acc");
    mock::MockServer server(dir / "shared");
    server.start();
    config::save_config(dir / "vuln.json", *mock_config(server.origin()));

    cli::FuzzOptions o;
    o.config_paths = {dir / "vuln.json"};
    o.shared_dir = dir / "shared";
    o.policy = "param_based";
    o.seed = 1;
    o.instances = 1;
    o.instance_prefix = "acc";
    o.stop_after = {"all"};
    o.duration_s = kDiscoveryWallClockS;
    o.max_candidates = kDiscoveryCandidates;
    o.report_path = dir / "report.jsonl";
    std::ostringstream out, err;
    auto t0 = Clock::now();
    int code = cli::cmd_fuzz(o, out, err);
    double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    server.stop();

    std::set<std::string> classes;
    std::size_t alerts = 0;
    std::uint64_t candidates = 0;
    for (const auto& j : read_jsonl(o.report_path)) {
      if (j["type"] == "alert") {
        classes.insert(j["class"].get<std::string>());
        ++alerts;
      } else if (j["type"] == "stats") {
        candidates = j["candidates_evaluated"].get<std::uint64_t>();
      }
    }
    bool pass = code == 2 && classes == all_class_names() && alerts >= 7 && wall <= kDiscoveryWallClockS &&
                candidates <= kDiscoveryCandidates;
    report(name, pass,
           "exit=" + std::to_string(code) + " classes=" + std::to_string(classes.size()) + "/7 alerts=" +
               std::to_string(alerts) + " candidates=" + std::to_string(candidates) + " (<= " +
               std::to_string(kDiscoveryCandidates) + ") wall=" + fmt(wall, 1) + "s (<= " +
               fmt(kDiscoveryWallClockS, 0) + "s)");
  });
}

// --- 2 ----------------------------------------------------------------------

struct SinkRun {
  std::size_t sinks = 0;
  std::uint64_t candidates = 0;  // evaluated when the last sink was first reached
};

SinkRun sink_run(sched::SelectionStrategy strategy, std::uint64_t seed) {
  TempDir dir("acc");
  campaign::CampaignOptions o;
  o.configs = {mock_config()};
  o.shared_dir = dir.path();
  o.seed = seed;
  o.strategy = strategy;
  o.max_candidates = kGuidanceBudget;
  o.timeout_s = 3600;
  o.feedback_wait = std::chrono::milliseconds(500);
  o.sync = false;
  o.transport = [p = dir.path()](const std::string&) { return std::make_unique<mock::InProcessTransport>(p); };
  std::atomic<bool> done{false};
  o.cancel = &done;
  std::set<int> reached;
  SinkRun run;
  std::uint64_t evaluated = 0;
  o.observer = [&](std::size_t, const Candidate&, const FeedbackRecord& fb) {
    ++evaluated;
    for (int s : mock::sinks_reached(fb)) {
      if (reached.insert(s).second) run.candidates = evaluated;
    }
    if (reached.size() == std::size(mock::kSinkLines)) done = true;
  };
  auto r = campaign::run_campaign(o);
  if (r.fatal) throw std::runtime_error(*r.fatal);
  run.sinks = reached.size();
  return run;
}

void guidance_superiority() {
  const std::string name = "coverage guidance beats random selection";
  criterion(name, [&] {
    int full = 0;
    double guided_sinks = 0, random_sinks = 0, guided_cost = 0;
    int random_full = 0;
    for (int i = 0; i < kGuidanceRuns; ++i) {
      auto g = sink_run(sched::SelectionStrategy::coverage_guided, 1000 + i);
      auto r = sink_run(sched::SelectionStrategy::random, 1000 + i);
      full += g.sinks == std::size(mock::kSinkLines);
      random_full += r.sinks == std::size(mock::kSinkLines);
      guided_sinks += g.sinks;
      random_sinks += r.sinks;
      guided_cost += g.candidates;
    }
    double rate = static_cast<double>(full) / kGuidanceRuns;
    guided_sinks /= kGuidanceRuns;
    random_sinks /= kGuidanceRuns;
    bool pass = rate >= kGuidanceMinFullRate && random_sinks < guided_sinks;
    report(name, pass,
           "budget=" + std::to_string(kGuidanceBudget) + " guided all-sinks rate=" + fmt(rate, 2) +
               " (>= " + fmt(kGuidanceMinFullRate, 2) + ") mean sinks guided=" + fmt(guided_sinks, 2) +
               " random=" + fmt(random_sinks, 2) + " random all-sinks runs=" + std::to_string(random_full) +
               " guided mean candidates to last sink=" + fmt(guided_cost / kGuidanceRuns, 0));
  });
}

// --- 3 ----------------------------------------------------------------------

void mutator_rates() {
  const std::string name = "special mutator rates";
  criterion(name, [&] {
    auto parent = testing::make_candidate(mock_config(), {{{ParamLocation::query, "m"}, "fuzz"},
                                                          {{ParamLocation::query, "d"}, "fuzz"}});
    GlobalCoverageStore empty;
    std::map<MutatorKind, int> counts;
    int children = 0;
    for (int i = 0; i < kRateDraws; ++i) {
      for (const auto& c : mutation::mutate_candidate(parent, {1, static_cast<std::uint64_t>(i)}, empty)) {
        ++children;
        if (c.mutation) ++counts[*c.mutation];
      }
    }
    double patr = static_cast<double>(counts[MutatorKind::patr_payload]) / children;
    double xss = static_cast<double>(counts[MutatorKind::xss_payload]) / children;
    const double want_patr = 0.05, want_xss = 0.95 / 20;
    bool pass = children >= kRateDraws * 0.99 && std::abs(patr - want_patr) <= kRateTolerance &&
                std::abs(xss - want_xss) <= kRateTolerance;
    report(name, pass,
           "children=" + std::to_string(children) + " patr=" + fmt(patr) + " (0.05 +- 0.005) xss=" + fmt(xss) +
               " (0.0475 +- 0.005)");
  });
}

// --- 4 ----------------------------------------------------------------------

void score_oracle() {
  const std::string name = "score equals set-difference oracle";
  criterion(name, [&] {
    std::mt19937_64 rng(77);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto random_record = [&] {
      FeedbackRecord fb;
      int files = pick(0, 4);
      for (int f = 0; f < files; ++f) {
        auto& lines = fb.coverage["/app/f" + std::to_string(pick(0, 5)) + ".php"];
        int n = pick(0, 8);
        for (int k = 0; k < n; ++k) lines.push_back(pick(1, 30));
      }
      return fb;
    };
    int mismatches = 0;
    for (int i = 0; i < kScoreInstances; ++i) {
      GlobalCoverageStore store;
      std::set<std::pair<std::string, int>> seen;
      std::set<std::string> seen_files;
      int history = pick(0, 4);
      for (int h = 0; h < history; ++h) {
        auto fb = random_record();
        store.merge(fb);
        for (const auto& [f, lines] : fb.coverage) {
          seen_files.insert(f);  // known even when no line was reported
          for (int l : lines) seen.insert({f, l});
        }
      }
      auto fb = random_record();
      std::set<std::string> new_files;
      std::set<std::pair<std::string, int>> new_lines;
      for (const auto& [f, lines] : fb.coverage) {
        if (!seen_files.count(f)) new_files.insert(f);
        for (int l : lines)
          if (!seen.count({f, l})) new_lines.insert({f, l});
      }
      auto got = sched::score_candidate(fb, store);
      std::uint64_t want = 10 * new_files.size() + new_lines.size();
      if (got.score != want || got.new_files != new_files.size() || got.new_lines != new_lines.size())
        ++mismatches;
    }
    report(name, mismatches == 0,
           std::to_string(kScoreInstances) + " instances, mismatches=" + std::to_string(mismatches));
  });
}

// --- 5 ----------------------------------------------------------------------

// Mock config plus a fixed `w` parameter so every worker owns its candidates.
std::shared_ptr<const EndpointConfig> tagged_config(int worker) {
  EndpointConfig cfg = *mock_config();
  cfg.param_groups[ParamLocation::query].params.push_back(
      {"w", {std::to_string(worker)}, ParamMode::fixed, ParamLocation::query});
  return std::make_shared<const EndpointConfig>(cfg);
}

void sync_convergence() {
  const std::string name = "sync convergence across 10 workers";
  criterion(name, [&] {
    TempDir dir("acc");
    std::vector<campaign::CampaignResult> results(kSyncWorkers);
    std::vector<std::thread> threads;
    for (int i = 0; i < kSyncWorkers; ++i) {
      threads.emplace_back([&, i] {
        campaign::CampaignOptions o;
        o.configs = {tagged_config(i)};
        o.shared_dir = dir.path();
        o.instance_prefix = "w" + std::to_string(i);
        o.seed = 500 + i;
        o.max_candidates = kSyncCandidates;
        o.timeout_s = 600;
        o.feedback_wait = std::chrono::milliseconds(500);
        o.transport = [p = dir.path()](const std::string&) { return std::make_unique<mock::InProcessTransport>(p); };
        results[i] = campaign::run_campaign(o);
      });
    }
    for (auto& t : threads) t.join();

    std::map<std::string, int> owners;
    std::size_t evaluated = 0;
    for (const auto& r : results) {
      if (r.fatal) throw std::runtime_error(*r.fatal);
      for (const auto& h : r.workers.at(0).evaluated) {
        ++owners[h];
        ++evaluated;
      }
    }
    std::size_t duplicates = 0;
    for (const auto& [h, n] : owners) duplicates += n > 1;

    // After quiescence every store syncs once more and must hold the same set.
    std::set<std::string> reference;
    std::size_t differing = 0, missing = 0, peers_seen = 0;
    for (int i = 0; i < kSyncWorkers; ++i) {
      const auto& w = results[i].workers.at(0);
      peers_seen = std::max(peers_seen, w.seen_hashes.size() - w.evaluated.size());
      GlobalCoverageStore store(dir / "sync", w.instance);
      store.sync();
      std::set<std::string> s(store.seen_hashes().begin(), store.seen_hashes().end());
      if (i == 0) reference = s;
      else differing += s != reference;
    }
    for (const auto& [h, n] : owners) missing += !reference.count(h);
    bool pass = differing == 0 && missing == 0 && duplicates == 0 && peers_seen > 0 &&
                evaluated == kSyncWorkers * kSyncCandidates;
    report(name, pass,
           "evaluated=" + std::to_string(evaluated) + " union=" + std::to_string(reference.size()) +
               " stores differing=" + std::to_string(differing) + " missing=" + std::to_string(missing) +
               " duplicate evaluations=" + std::to_string(duplicates) +
               " max peer hashes seen live=" + std::to_string(peers_seen));
  });
}

// --- 6 ----------------------------------------------------------------------

void detection_rules() {
  const std::string name = "detection rule matrix";
  criterion(name, [&] {
    auto rows = testing::detection_matrix();
    std::size_t passed = 0;
    std::string failed;
    for (const auto& r : rows) {
      if (r.pass) ++passed;
      else failed += " [" + r.name + ": " + r.detail + "]";
    }
    auto prop = testing::filter_property(kFilterRecords, 99);
    bool pass = passed == rows.size() && prop.violations == 0 && prop.records == kFilterRecords &&
                prop.param_based_alerts > 0;
    report(name, pass,
           "rows " + std::to_string(passed) + "/" + std::to_string(rows.size()) + ", filter property on " +
               std::to_string(prop.records) + " records: param_based alerts=" +
               std::to_string(prop.param_based_alerts) + " default alerts=" + std::to_string(prop.default_alerts) +
               " violations=" + std::to_string(prop.violations) + failed);
  });
}

// --- 7 ----------------------------------------------------------------------

void config_round_trip() {
  const std::string name = "config round trip and HAR extraction";
  criterion(name, [&] {
    auto first = config::load_config(fixture("listing5.json"));
    auto second = config::parse_config(config::emit_config(first));
    bool round_trip = first == second;

    auto parsed = har::parse_har(read_text(fixture("capture.har")));
    auto filtered = har::filter_endpoints(parsed.requests);
    TempDir dir("acc");
    cli::HargenOptions o;
    o.har_path = fixture("capture.har");
    o.out_dir = dir / "configs";
    std::ostringstream out, err;
    int code = cli::cmd_hargen(o, out, err);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(o.out_dir)) files += e.path().extension() == ".json";

    bool pass = round_trip && parsed.requests.size() == kHarEntries && filtered.dropped_static == kHarStatic &&
                code == 0 && files == kHarConfigs;
    report(name, pass,
           std::string("listing round trip ") + (round_trip ? "equal" : "DIFFERENT") + ", HAR entries=" +
               std::to_string(parsed.requests.size()) + " static=" + std::to_string(filtered.dropped_static) +
               " configs written=" + std::to_string(files));
  });
}

// --- 8 ----------------------------------------------------------------------

struct FuzzRun {
  int code = 0;
  std::string trace;
  std::vector<std::string> alerts;
};

FuzzRun seeded_run(std::uint64_t seed) {
  TempDir dir("acc");
  mock::MockServer server(dir / "shared");
  server.start();
  config::save_config(dir / "vuln.json", *mock_config(server.origin()));
  cli::FuzzOptions o;
  o.config_paths = {dir / "vuln.json"};
  o.shared_dir = dir / "shared";
  o.seed = seed;
  o.instance_prefix = "det";
  o.max_candidates = kDeterminismCandidates;
  o.report_path = dir / "report.jsonl";
  o.trace_path = dir / "trace.tsv";
  std::ostringstream out, err;
  FuzzRun run;
  run.code = cli::cmd_fuzz(o, out, err);
  server.stop();
  run.trace = read_text(o.trace_path);
  // Mask the timestamp and the ephemeral port.
  for (auto j : read_jsonl(o.report_path)) {
    if (j["type"] != "alert") continue;
    j.erase("time");
    auto url = j["url"].get<std::string>();
    j["url"] = url.substr(url.find('/', url.find("//") + 2));
    run.alerts.push_back(j.dump());
  }
  return run;
}

void determinism() {
  const std::string name = "same seed, same campaign";
  criterion(name, [&] {
    auto a = seeded_run(4242);
    auto b = seeded_run(4242);
    std::size_t lines = std::count(a.trace.begin(), a.trace.end(), '\n');
    bool pass = a.code != 1 && b.code != 1 && lines == kDeterminismCandidates && a.trace == b.trace &&
                a.alerts == b.alerts && !a.alerts.empty();
    report(name, pass,
           "candidates=" + std::to_string(lines) + " traces " + (a.trace == b.trace ? "identical" : "DIFFER") +
               ", alerts " + std::to_string(a.alerts.size()) + " vs " + std::to_string(b.alerts.size()) +
               (a.alerts == b.alerts ? " identical" : " DIFFER"));
  });
}

}  // namespace

int main() {
  end_to_end_discovery();
  guidance_superiority();
  mutator_rates();
  score_oracle();
  sync_convergence();
  detection_rules();
  config_round_trip();
  determinism();
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << "(" << failures << " failing)" << std::endl;
  return failures ? 1 : 0;
}
