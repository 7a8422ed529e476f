#include "webphuzz/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "webphuzz/error.hpp"
#include "webphuzz/feedback.hpp"
#include "webphuzz/login.hpp"
#include "webphuzz/store.hpp"
#include "webphuzz/url.hpp"

namespace webphuzz::campaign {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

// Consecutive transport failures after which the target is considered gone.
constexpr int kMaxConsecutiveFailures = 25;

json hook_json(const HookEvent& ev) {
  json j;
  j["function"] = ev.function;
  j["args"] = ev.args;
  j["error"] = ev.error ? json(*ev.error) : json(nullptr);
  j["exception"] =
      ev.exception ? json{{"class", ev.exception->class_name}, {"message", ev.exception->message}} : json(nullptr);
  j["returned_false"] = ev.returned_false;
  return j;
}

json evidence_json(const Evidence& e) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HookEvent>) {
          json j = hook_json(v);
          j["kind"] = "hook";
          return j;
        } else if constexpr (std::is_same_v<T, ResponseExcerpt>) {
          return {{"kind", "response"}, {"status", v.status}, {"location", v.location}, {"snippet", v.snippet}};
        } else if constexpr (std::is_same_v<T, PhpError>) {
          return {{"kind", "php_error"}, {"message", v.message}, {"file", v.file}, {"line", v.line}};
        } else {
          return {{"kind", "php_exception"}, {"class", v.class_name}, {"message", v.message},
                  {"file", v.file},          {"line", v.line}};
        }
      },
      e);
}

std::string now_iso8601() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

// State shared by the workers of one campaign. Everything else is per worker.
struct Shared {
  explicit Shared(const CampaignOptions& o) : options(o), start(Clock::now()) {}

  const CampaignOptions& options;
  Clock::time_point start;
  std::atomic<bool> stop{false};

  std::mutex mu;
  std::set<std::string> alert_keys;
  std::vector<ReportedAlert> alerts;
  std::set<VulnClass> found;
  std::set<std::string> info_keys;
  std::optional<std::string> fatal;
  std::ofstream report;
  std::ofstream trace;

  bool cancelled() const {
    return stop.load(std::memory_order_relaxed) ||
           (options.cancel && options.cancel->load(std::memory_order_relaxed));
  }

  std::optional<Clock::time_point> deadline() const {
    if (!options.duration_s) return std::nullopt;
    return start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(*options.duration_s));
  }

  void set_fatal(std::string message) {
    std::lock_guard lock(mu);
    if (!fatal) fatal = std::move(message);
    stop = true;
  }

  void add_alert(ReportedAlert a) {
    std::lock_guard lock(mu);
    // same sink through the same params of the same endpoint is one finding
    auto key = detect::alert_key(a.alert) + "|" + std::string(to_string(a.method)) + " ";
    if (auto url = parse_url(a.request_url)) key += url->path;
    if (!alert_keys.insert(key).second) return;
    found.insert(a.alert.vuln_class);
    if (report.is_open()) report << alert_json(a) << '\n' << std::flush;
    alerts.push_back(std::move(a));
    const auto& want = options.stop_after_classes;
    if (!want.empty() && std::includes(found.begin(), found.end(), want.begin(), want.end())) stop = true;
  }

  // php_errors and php_exceptions are reported once each, for information.
  void add_info(const std::string& instance, const Candidate& c, const FeedbackRecord& fb) {
    if (fb.php_errors.empty() && fb.php_exceptions.empty()) return;
    std::lock_guard lock(mu);
    if (!report.is_open()) return;
    auto emit = [&](const std::string& key, json entry) {
      if (!info_keys.insert(key).second) return;
      entry["instance"] = instance;
      entry["candidate_hash"] = candidate_hash(c);
      report << dump(entry) << '\n';
    };
    for (const auto& e : fb.php_errors) {
      emit("e|" + e.file + "|" + std::to_string(e.line) + "|" + e.message,
           {{"type", "info"}, {"kind", "php_error"}, {"message", e.message}, {"file", e.file}, {"line", e.line}});
    }
    for (const auto& e : fb.php_exceptions) {
      emit("x|" + e.file + "|" + std::to_string(e.line) + "|" + e.class_name,
           {{"type", "info"},
            {"kind", "php_exception"},
            {"class", e.class_name},
            {"message", e.message},
            {"file", e.file},
            {"line", e.line}});
    }
    report.flush();
  }

  void add_trace(const std::string& instance, std::uint64_t seq, const Candidate& c, const std::string& hash,
                 std::uint64_t score) {
    std::lock_guard lock(mu);
    if (!trace.is_open()) return;
    trace << instance << '\t' << seq << '\t' << hash << '\t' << score << '\t'
          << (c.mutation ? to_string(*c.mutation) : std::string_view("seed")) << '\n';
  }
};

class Worker {
 public:
  Worker(Shared& shared, std::size_t index)
      : shared_(shared),
        options_(shared.options),
        index_(index),
        rng_(options_.seed + index),
        id_rng_((options_.seed + index) ^ 0x9e3779b97f4a7c15ULL),
        checker_(options_.policy) {
    result_.instance = options_.instance_prefix + "-" + std::to_string(index);
    if (options_.sync) {
      store_ = GlobalCoverageStore(options_.shared_dir / "sync", result_.instance);
    }
  }

  WorkerResult run() {
    auto started = Clock::now();
    try {
      for (const auto& cfg : options_.configs) {
        if (stopping()) break;
        fuzz_endpoint(cfg);
        iteration_deadline_.reset();
      }
      sync();
    } catch (const Error& e) {
      shared_.set_fatal(e.what());
    } catch (const std::exception& e) {
      shared_.set_fatal(std::string("internal error: ") + e.what());
    }
    result_.stats.elapsed_s = std::chrono::duration<double>(Clock::now() - started).count();
    result_.stats.coverage_lines = store_.line_count();
    result_.stats.coverage_files = store_.file_count();
    result_.seen_hashes.insert(store_.seen_hashes().begin(), store_.seen_hashes().end());
    return std::move(result_);
  }

 private:
  bool stopping() const {
    if (shared_.cancelled()) return true;
    if (options_.max_candidates && result_.stats.candidates_evaluated >= options_.max_candidates) return true;
    auto now = Clock::now();
    if (auto d = shared_.deadline(); d && now >= *d) return true;
    return iteration_deadline_ && now >= *iteration_deadline_;
  }

  void sync() {
    if (store_.persistent()) store_.sync();
  }

  http::Transport& transport_for(const EndpointConfig& cfg) {
    auto url = parse_url(cfg.target_url);
    if (!url) throw ConfigError("bad target url " + cfg.target_url);
    auto origin = url->origin();
    auto& slot = transports_[origin];
    if (!slot) {
      slot = options_.transport ? options_.transport(origin) : std::make_unique<http::HttpTransport>(origin);
    }
    return *slot;
  }

  void login(const EndpointConfig& cfg) {
    cookies_.clear();
    if (!cfg.login_profile) return;
    std::map<std::string, std::string> env = {{"WEBPHUZZ_TARGET", cfg.target_url},
                                              {"WEBPHUZZ_INSTANCE", result_.instance}};
    for (auto& [name, value] : login::run_login(*cfg.login_profile, options_.login_dir, env))
      cookies_[ParamKey{ParamLocation::cookie, name}] = value;
  }

  void fuzz_endpoint(const std::shared_ptr<const EndpointConfig>& cfg) {
    cfg->validate();
    if (!cfg->has_fuzz_params()) throw NoFuzzParams(cfg->target_url);
    double budget = options_.timeout_s.value_or(cfg->timeout_s);
    iteration_deadline_ =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(budget));
    login(*cfg);

    sched::CandidatePool pool(options_.strategy, rng_());
    for (auto& seed : mutation::expand_seeds(cfg)) {
      if (stopping()) return;
      for (const auto& [key, value] : cookies_) seed.values[key] = value;
      auto report = evaluate(seed);
      pool.add(std::move(seed), report.value_or(ScoreReport{}));
    }
    sync();

    while (!stopping()) {
      const auto& entry = pool.select_next();
      const auto parent_id = entry.id;
      const Candidate parent = entry.candidate;
      mutation::MutationBudget budget_{pool.energy_for(entry), rng_()};
      auto children = mutation::mutate_candidate(parent, budget_, store_, options_.rates);

      std::vector<ScoreReport> reports;
      for (auto& child : children) {
        if (stopping()) break;
        auto report = evaluate(child);
        if (!report) continue;
        reports.push_back(*report);
        if (pool.admits(*report)) pool.add(std::move(child), *report);
      }
      pool.mark_exhausted(parent_id, reports);
      ++result_.stats.rounds;
      result_.stats.pool_size = pool.size();
      sync();
    }
  }

  // Sends one candidate, scores it and runs the checks. Returns nullopt when
  // the candidate was skipped (already evaluated, unsendable, or the request
  // failed).
  std::optional<ScoreReport> evaluate(Candidate& c) {
    auto hash = candidate_hash(c);
    if (!store_.insert_hash(hash)) return std::nullopt;

    auto unix_now = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    c.feedback_id = feedback::make_feedback_id(id_rng_, unix_now);

    http::PreparedRequest request;
    try {
      request = http::prepare_request(c);
    } catch (const InvalidHeaderValue&) {
      ++result_.stats.request_errors;
      return std::nullopt;
    }

    const std::uint64_t seq = result_.stats.candidates_evaluated++;
    result_.evaluated.push_back(hash);
    ResponseSummary response;
    try {
      ++result_.stats.requests_sent;
      response = http::execute_with_retry(transport_for(*c.endpoint), request, options_.request_timeout_s,
                                          options_.retry);
      consecutive_failures_ = 0;
      reached_target_ = true;
    } catch (const TimeoutError&) {
      ++result_.stats.timeouts;
      fail_transport("target keeps timing out");
      return std::nullopt;
    } catch (const ConnectError& e) {
      ++result_.stats.request_errors;
      if (!reached_target_) throw ConnectError(std::string("target unreachable: ") + e.what());
      fail_transport(e.what());
      return std::nullopt;
    }

    auto collected = feedback::collect(c.feedback_id, options_.shared_dir, options_.feedback_wait);
    FeedbackRecord fb;
    switch (collected.status) {
      case feedback::CollectStatus::ok:
        fb = std::move(*collected.record);
        break;
      case feedback::CollectStatus::missing:
        ++result_.stats.feedback_missing;
        fb.id = c.feedback_id;
        break;
      case feedback::CollectStatus::malformed:
        ++result_.stats.feedback_malformed;
        fb.id = c.feedback_id;
        break;
    }

    auto report = store_.merge(fb);
    c.score = report.score;
    c.response = std::move(response);
    for (auto& alert : checker_.check(c, fb)) {
      shared_.add_alert(ReportedAlert{std::move(alert), result_.instance, request.url, c.method, seq});
    }
    shared_.add_info(result_.instance, c, fb);
    shared_.add_trace(result_.instance, seq, c, hash, report.score);
    if (options_.observer) options_.observer(index_, c, fb);
    c.response.reset();
    return report;
  }

  void fail_transport(const std::string& what) {
    if (++consecutive_failures_ >= kMaxConsecutiveFailures) throw ConnectError(what);
  }

  Shared& shared_;
  const CampaignOptions& options_;
  std::size_t index_;
  mutation::Rng rng_;
  mutation::Rng id_rng_;
  detect::VulnChecker checker_;
  GlobalCoverageStore store_;
  std::map<std::string, std::unique_ptr<http::Transport>> transports_;
  std::map<ParamKey, std::string> cookies_;
  std::optional<Clock::time_point> iteration_deadline_;
  int consecutive_failures_ = 0;
  bool reached_target_ = false;
  WorkerResult result_;
};

}  // namespace

CampaignStats& CampaignStats::operator+=(const CampaignStats& o) {
  requests_sent += o.requests_sent;
  candidates_evaluated += o.candidates_evaluated;
  feedback_missing += o.feedback_missing;
  feedback_malformed += o.feedback_malformed;
  timeouts += o.timeouts;
  request_errors += o.request_errors;
  rounds += o.rounds;
  coverage_lines = std::max(coverage_lines, o.coverage_lines);
  coverage_files = std::max(coverage_files, o.coverage_files);
  pool_size += o.pool_size;
  elapsed_s = std::max(elapsed_s, o.elapsed_s);
  return *this;
}

std::set<VulnClass> CampaignResult::classes() const {
  std::set<VulnClass> out;
  for (const auto& a : alerts) out.insert(a.alert.vuln_class);
  return out;
}

std::string alert_json(const ReportedAlert& a, bool with_time) {
  json j;
  j["type"] = "alert";
  j["class"] = to_string(a.alert.vuln_class);
  j["confidence"] = to_string(a.alert.confidence);
  j["candidate_hash"] = a.alert.candidate_hash;
  j["instance"] = a.instance;
  j["sequence"] = a.sequence;
  j["method"] = to_string(a.method);
  j["url"] = a.request_url;
  json params = json::array();
  for (const auto& p : a.alert.matched_params)
    params.push_back({{"location", to_string(p.location)}, {"name", p.name}, {"value", p.value}});
  j["matched_params"] = std::move(params);
  j["evidence"] = evidence_json(a.alert.evidence);
  if (with_time) j["time"] = now_iso8601();
  return dump(j);
}

std::string stats_json(const CampaignStats& s, std::size_t alerts, std::size_t instances) {
  json j;
  j["type"] = "stats";
  j["instances"] = instances;
  j["requests_sent"] = s.requests_sent;
  j["candidates_evaluated"] = s.candidates_evaluated;
  j["exec_per_sec"] = s.exec_per_sec();
  j["coverage_lines"] = s.coverage_lines;
  j["coverage_files"] = s.coverage_files;
  j["feedback_missing"] = s.feedback_missing;
  j["feedback_malformed"] = s.feedback_malformed;
  j["timeouts"] = s.timeouts;
  j["request_errors"] = s.request_errors;
  j["alerts"] = alerts;
  j["elapsed_s"] = s.elapsed_s;
  return dump(j);
}

CampaignResult run_campaign(const CampaignOptions& options) {
  CampaignResult result;
  if (options.configs.empty()) {
    result.fatal = EmptyCampaign().what();
    return result;
  }
  if (options.instances < 1) {
    result.fatal = ConfigError("instances must be at least 1").what();
    return result;
  }

  Shared shared(options);
  try {
    std::filesystem::create_directories(options.shared_dir);
    if (!options.report_path.empty()) {
      if (options.report_path.has_parent_path()) std::filesystem::create_directories(options.report_path.parent_path());
      shared.report.open(options.report_path, std::ios::trunc);
      if (!shared.report) throw IoError("cannot write " + options.report_path.string());
    }
    if (!options.trace_path.empty()) {
      if (options.trace_path.has_parent_path()) std::filesystem::create_directories(options.trace_path.parent_path());
      shared.trace.open(options.trace_path, std::ios::trunc);
      if (!shared.trace) throw IoError("cannot write " + options.trace_path.string());
    }
  } catch (const std::exception& e) {
    result.fatal = e.what();
    return result;
  }

  result.workers.resize(options.instances);
  if (options.instances == 1) {
    result.workers[0] = Worker(shared, 0).run();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < options.instances; ++i) {
      threads.emplace_back([&shared, &result, i] { result.workers[i] = Worker(shared, i).run(); });
    }
    for (auto& t : threads) t.join();
  }

  for (const auto& w : result.workers) result.stats += w.stats;
  result.stats.elapsed_s = std::chrono::duration<double>(Clock::now() - shared.start).count();
  result.alerts = std::move(shared.alerts);
  result.fatal = shared.fatal;
  if (shared.report.is_open()) {
    shared.report << stats_json(result.stats, result.alerts.size(), options.instances) << '\n';
    shared.report.flush();
  }
  return result;
}

}  // namespace webphuzz::campaign
