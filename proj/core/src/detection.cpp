#include "webphuzz/detection.hpp"

#include <algorithm>
#include <cctype>

#include "webphuzz/hooks.hpp"
#include "webphuzz/html.hpp"

namespace webphuzz::detect {

namespace {

using hooks::HookGroup;

bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool icontains(std::string_view hay, std::string_view needle) {
  return lower(hay).find(lower(needle)) != std::string::npos;
}

bool has_failure(const HookEvent& ev) { return ev.error.has_value() || ev.exception.has_value(); }

// Error text and exception message of a hook call.
std::vector<std::string_view> failure_texts(const HookEvent& ev) {
  std::vector<std::string_view> out;
  if (ev.error) out.push_back(*ev.error);
  if (ev.exception) out.push_back(ev.exception->message);
  return out;
}

VulnAlert hook_alert(VulnClass cls, const Candidate& c, const HookEvent& ev, std::vector<MatchedParam> matched,
                     Confidence confidence) {
  VulnAlert a;
  a.vuln_class = cls;
  a.candidate_hash = candidate_hash(c);
  a.evidence = ev;
  a.matched_params = std::move(matched);
  a.confidence = confidence;
  return a;
}

// The rule shared by sqli, rce and ides: `triggered` says whether the call
// misbehaved. param_based needs flow; default alerts on any trigger.
void flow_gated(std::vector<VulnAlert>& out, VulnClass cls, const Candidate& c, const HookEvent& ev,
                bool triggered, const VulnCheckPolicy& policy) {
  if (!triggered) return;
  auto flow = param_flow(c, ev.args, policy);
  if (!flow.empty()) {
    out.push_back(hook_alert(cls, c, ev, std::move(flow), Confidence::confirmed_param_flow));
  } else if (policy.mode == CheckMode::default_mode) {
    out.push_back(hook_alert(cls, c, ev, {}, Confidence::heuristic));
  }
}

bool is_html_like(std::string_view content_type) {
  auto ct = lower(content_type);
  return ct.find("html") != std::string::npos;
}

std::string excerpt(std::string_view body, std::size_t at, std::size_t len) {
  constexpr std::size_t kContext = 40;
  std::size_t begin = at > kContext ? at - kContext : 0;
  std::size_t end = std::min(body.size(), at + len + kContext);
  return std::string(body.substr(begin, end - begin));
}

std::vector<VulnAlert> run_xss(const Candidate& c, const FeedbackRecord&, const VulnCheckPolicy& p) {
  return check_xss(c, p);
}
std::vector<VulnAlert> run_opre(const Candidate& c, const FeedbackRecord&, const VulnCheckPolicy& p) {
  return check_opre(c, p);
}
template <auto Fn>
std::vector<VulnAlert> run_server(const Candidate& c, const FeedbackRecord& fb, const VulnCheckPolicy& p) {
  return Fn(fb, c, p);
}

}  // namespace

std::string_view to_string(CheckMode m) { return m == CheckMode::param_based ? "param_based" : "default"; }

std::optional<CheckMode> parse_check_mode(std::string_view text) {
  if (text == "param_based") return CheckMode::param_based;
  if (text == "default") return CheckMode::default_mode;
  return std::nullopt;
}

std::vector<std::string> default_shell_error_patterns() {
  return {"syntax error", "not found", "No such file or directory", "Permission denied", "unexpected token"};
}

bool value_flows(std::string_view value, std::string_view arg, std::size_t min_len) {
  if (value.empty()) return false;
  if (value.size() >= min_len) return arg.find(value) != std::string_view::npos;
  for (auto at = arg.find(value); at != std::string_view::npos; at = arg.find(value, at + 1)) {
    bool left = at == 0 || !is_word(arg[at - 1]) || !is_word(value.front());
    std::size_t end = at + value.size();
    bool right = end == arg.size() || !is_word(arg[end]) || !is_word(value.back());
    if (left && right) return true;
  }
  return false;
}

std::vector<MatchedParam> param_flow(const Candidate& c, const std::vector<std::string>& args,
                                     const VulnCheckPolicy& policy) {
  std::vector<MatchedParam> out;
  for (const auto& [key, value] : c.fuzz_values()) {
    bool flows = std::any_of(args.begin(), args.end(), [&](const std::string& arg) {
      return value_flows(value, arg, policy.min_fuzz_match_len);
    });
    if (flows) out.push_back({key.location, key.name, value});
  }
  return out;
}

std::vector<VulnAlert> check_sqli(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy) {
  std::vector<VulnAlert> out;
  for (const auto& ev : fb.hook_events) {
    if (!hooks::in_group(ev.function, HookGroup::sqli)) continue;
    // A bare false return is an ordinary failed query.
    flow_gated(out, VulnClass::sqli, c, ev, has_failure(ev), policy);
  }
  return out;
}

std::vector<VulnAlert> check_rce(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy) {
  std::vector<VulnAlert> out;
  for (const auto& ev : fb.hook_events) {
    if (!hooks::in_group(ev.function, HookGroup::rce)) continue;
    bool shell_error = false;
    for (auto text : failure_texts(ev)) {
      for (const auto& pattern : policy.shell_error_patterns) shell_error = shell_error || icontains(text, pattern);
    }
    flow_gated(out, VulnClass::rce, c, ev, shell_error, policy);
  }
  return out;
}

std::vector<VulnAlert> check_patr(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy) {
  std::vector<VulnAlert> out;
  for (const auto& ev : fb.hook_events) {
    if (!hooks::in_group(ev.function, HookGroup::patr)) continue;
    auto flow = param_flow(c, ev.args, policy);
    bool traversal = std::any_of(flow.begin(), flow.end(), [](const MatchedParam& m) {
      return m.value.find("../") != std::string::npos || m.value.find("/etc/") != std::string::npos;
    });
    bool failed = has_failure(ev);
    if (!flow.empty() && traversal) {
      out.push_back(hook_alert(VulnClass::patr, c, ev, std::move(flow), Confidence::confirmed_param_flow));
    } else if (!flow.empty() && failed) {
      out.push_back(hook_alert(VulnClass::patr, c, ev, std::move(flow), Confidence::heuristic));
    } else if (policy.mode == CheckMode::default_mode && (failed || !flow.empty())) {
      out.push_back(hook_alert(VulnClass::patr, c, ev, std::move(flow), Confidence::heuristic));
    }
  }
  return out;
}

std::vector<VulnAlert> check_ides(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy) {
  std::vector<VulnAlert> out;
  for (const auto& ev : fb.hook_events) {
    if (!hooks::in_group(ev.function, HookGroup::ides)) continue;
    if (has_failure(ev)) {
      flow_gated(out, VulnClass::ides, c, ev, true, policy);
    } else if (ev.returned_false && policy.mode == CheckMode::default_mode) {
      auto flow = param_flow(c, ev.args, policy);
      if (!flow.empty()) out.push_back(hook_alert(VulnClass::ides, c, ev, std::move(flow), Confidence::heuristic));
    }
  }
  return out;
}

std::vector<VulnAlert> check_xxe(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy) {
  std::vector<VulnAlert> out;
  for (const auto& ev : fb.hook_events) {
    if (!hooks::in_group(ev.function, HookGroup::xxe)) continue;
    bool noent = std::find(ev.args.begin(), ev.args.end(), hooks::kNoentFlagArg) != ev.args.end();
    if (!noent) continue;
    bool entity_error = false;
    for (auto text : failure_texts(ev)) entity_error = entity_error || icontains(text, "entity");
    bool declares = std::any_of(ev.args.begin(), ev.args.end(), [](const std::string& a) {
      return icontains(a, "<!ENTITY") || icontains(a, "<!DOCTYPE");
    });
    flow_gated(out, VulnClass::xxe, c, ev, entity_error || declares, policy);
  }
  return out;
}

std::vector<VulnAlert> check_xss(const Candidate& c, const VulnCheckPolicy& policy) {
  std::vector<VulnAlert> out;
  if (!c.response) return out;
  const auto& r = *c.response;
  if (policy.xss_respect_content_type) {
    auto ct = r.header("Content-Type");
    if (ct && !is_html_like(*ct)) return out;
  }
  for (const auto& marker : c.markers) {
    if (marker.vuln_class != MarkerClass::xss || c.mode_of(marker.param) != ParamMode::fuzz) continue;
    auto it = c.values.find(marker.param);
    if (it == c.values.end()) continue;
    for (const auto& hit : html::find_marker_contexts(r.body, marker.token)) {
      if (!html::is_executable(hit.context)) continue;
      VulnAlert a;
      a.vuln_class = VulnClass::xss;
      a.candidate_hash = candidate_hash(c);
      a.evidence = ResponseExcerpt{r.status, r.header("Location").value_or(""),
                                   excerpt(r.body, hit.offset, marker.token.size())};
      a.matched_params = {{marker.param.location, marker.param.name, it->second}};
      a.confidence = Confidence::confirmed_param_flow;
      out.push_back(std::move(a));
      break;
    }
  }
  return out;
}

std::vector<VulnAlert> check_opre(const Candidate& c, const VulnCheckPolicy& policy) {
  std::vector<VulnAlert> out;
  if (!c.response) return out;
  const auto& r = *c.response;
  if (r.status < 300 || r.status > 399) return out;
  auto location = r.header("Location");
  if (!location) return out;

  std::vector<MatchedParam> matched;
  for (const auto& [key, value] : c.fuzz_values()) {
    if (value.size() < policy.min_fuzz_match_len) continue;
    bool prefix = location->compare(0, value.size(), value) == 0;
    auto lv = lower(value);
    bool absolute = (lv.rfind("http://", 0) == 0 || lv.rfind("https://", 0) == 0 || lv.rfind("ftp://", 0) == 0) &&
                    location->find(value) != std::string::npos;
    if (prefix || absolute) matched.push_back({key.location, key.name, value});
  }
  if (matched.empty()) return out;
  VulnAlert a;
  a.vuln_class = VulnClass::opre;
  a.candidate_hash = candidate_hash(c);
  a.evidence = ResponseExcerpt{r.status, *location, ""};
  a.matched_params = std::move(matched);
  a.confidence = Confidence::confirmed_param_flow;
  out.push_back(std::move(a));
  return out;
}

std::vector<VulnCheck> default_checks() {
  return {
      {VulnClass::sqli, &run_server<check_sqli>}, {VulnClass::rce, &run_server<check_rce>},
      {VulnClass::patr, &run_server<check_patr>}, {VulnClass::ides, &run_server<check_ides>},
      {VulnClass::xxe, &run_server<check_xxe>},   {VulnClass::xss, &run_xss},
      {VulnClass::opre, &run_opre},
  };
}

VulnChecker::VulnChecker(VulnCheckPolicy policy, std::vector<VulnCheck> checks)
    : policy_(std::move(policy)), checks_(std::move(checks)) {}

std::vector<VulnAlert> VulnChecker::check(const Candidate& c, const FeedbackRecord& fb) const {
  std::vector<VulnAlert> out;
  for (const auto& check : checks_) {
    auto alerts = check.run(c, fb, policy_);
    std::move(alerts.begin(), alerts.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<VulnAlert> run_checks(const Candidate& c, const FeedbackRecord& fb, const VulnCheckPolicy& policy) {
  return VulnChecker(policy).check(c, fb);
}

std::string alert_key(const VulnAlert& a) {
  std::string key(to_string(a.vuln_class));
  key += '|';
  if (const auto* ev = std::get_if<HookEvent>(&a.evidence)) {
    key += lower(ev->function);
  } else if (std::holds_alternative<ResponseExcerpt>(a.evidence)) {
    key += "response";
  } else {
    key += "php";
  }
  std::vector<std::string> names;
  for (const auto& m : a.matched_params) names.push_back(std::string(to_string(m.location)) + ":" + m.name);
  std::sort(names.begin(), names.end());
  for (const auto& n : names) key += '|' + n;
  return key;
}

}  // namespace webphuzz::detect
