#pragma once

// Fuzzing campaigns: N worker loops, each with its own pool, coverage store and
// transport, coordinating only through the shared directory.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "webphuzz/detection.hpp"
#include "webphuzz/model.hpp"
#include "webphuzz/mutation.hpp"
#include "webphuzz/request.hpp"
#include "webphuzz/scheduler.hpp"

namespace webphuzz::campaign {

using TransportFactory = std::function<std::unique_ptr<http::Transport>(const std::string& origin)>;

struct CampaignOptions {
  std::vector<std::shared_ptr<const EndpointConfig>> configs;
  std::filesystem::path shared_dir;
  std::size_t instances = 1;
  std::string instance_prefix = "fuzzer";

  // Fuzzing time per endpoint config; the config's `timeout` when unset.
  // Configs are fuzzed one after another.
  std::optional<double> timeout_s;
  double request_timeout_s = 30.0;
  // Wall-clock budget for the whole campaign; unlimited when unset.
  std::optional<double> duration_s;
  // Evaluated candidates per worker; unlimited when 0.
  std::uint64_t max_candidates = 0;
  // Stop every worker once alerts cover all of these classes.
  std::set<VulnClass> stop_after_classes;

  detect::VulnCheckPolicy policy;
  sched::SelectionStrategy strategy = sched::SelectionStrategy::coverage_guided;
  mutation::SpecialRates rates;
  std::uint64_t seed = 0;
  std::chrono::milliseconds feedback_wait{2000};
  http::RetryPolicy retry;
  // Exchange hashes and coverage with other instances through
  // `<shared_dir>/sync` after every round.
  bool sync = true;

  std::filesystem::path report_path;  // JSONL; skipped when empty
  std::filesystem::path trace_path;   // one line per evaluated candidate; skipped when empty
  std::filesystem::path login_dir = "login";

  TransportFactory transport;  // HttpTransport when empty
  // Called from the worker thread for every evaluated candidate.
  std::function<void(std::size_t worker, const Candidate&, const FeedbackRecord&)> observer;
  const std::atomic<bool>* cancel = nullptr;
};

struct CampaignStats {
  std::uint64_t requests_sent = 0;
  std::uint64_t candidates_evaluated = 0;
  std::uint64_t feedback_missing = 0;
  std::uint64_t feedback_malformed = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t request_errors = 0;
  std::uint64_t rounds = 0;
  std::size_t coverage_lines = 0;
  std::size_t coverage_files = 0;
  std::size_t pool_size = 0;
  double elapsed_s = 0.0;

  double exec_per_sec() const { return elapsed_s > 0 ? requests_sent / elapsed_s : 0.0; }
  CampaignStats& operator+=(const CampaignStats& o);
};

struct ReportedAlert {
  VulnAlert alert;
  std::string instance;
  std::string request_url;
  HttpMethod method = HttpMethod::GET;
  std::uint64_t sequence = 0;  // index of the candidate within its worker
};

struct WorkerResult {
  std::string instance;
  CampaignStats stats;
  std::vector<std::string> evaluated;  // candidate hashes, in evaluation order
  std::set<std::string> seen_hashes;   // store contents after the last sync
};

struct CampaignResult {
  std::vector<ReportedAlert> alerts;  // deduplicated, in discovery order
  std::vector<WorkerResult> workers;
  CampaignStats stats;
  std::optional<std::string> fatal;  // set when the campaign aborted

  std::set<VulnClass> classes() const;
  int exit_code() const { return fatal ? 1 : (alerts.empty() ? 0 : 2); }
};

// Runs until every worker hits a stop condition. Fatal problems (invalid
// config, target unreachable at startup, failed login) end up in
// `result.fatal`; nothing is thrown for them.
CampaignResult run_campaign(const CampaignOptions& options);

// JSON line for one alert. `with_time` adds a "time" field.
std::string alert_json(const ReportedAlert& a, bool with_time = true);

// Stats line written at the end of a report.
std::string stats_json(const CampaignStats& s, std::size_t alerts, std::size_t instances);

}  // namespace webphuzz::campaign
