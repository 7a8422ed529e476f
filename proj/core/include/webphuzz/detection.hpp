#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "webphuzz/model.hpp"

namespace webphuzz::detect {

enum class CheckMode {
  // Server-side alerts need a fuzz value flowing into the hooked call.
  param_based,
  // Any error or exception in a hooked call alerts.
  default_mode,
};

std::string_view to_string(CheckMode m);
std::optional<CheckMode> parse_check_mode(std::string_view text);

// Case-insensitive substrings of shell stderr that indicate a broken command.
std::vector<std::string> default_shell_error_patterns();

struct VulnCheckPolicy {
  CheckMode mode = CheckMode::param_based;
  std::size_t min_fuzz_match_len = 4;
  bool xss_respect_content_type = false;
  std::vector<std::string> shell_error_patterns = default_shell_error_patterns();
};

// Whether `value` counts as having reached `arg`. Values of at least
// `min_len` bytes match as plain substrings. Shorter ones must sit on word
// boundaries, so "1" matches "id = 1" but not "id = 10".
bool value_flows(std::string_view value, std::string_view arg, std::size_t min_len);

// Fuzz parameters of `c` whose value flows into any of `args`.
std::vector<MatchedParam> param_flow(const Candidate& c, const std::vector<std::string>& args,
                                     const VulnCheckPolicy& policy);

std::vector<VulnAlert> check_sqli(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy);
std::vector<VulnAlert> check_rce(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy);
std::vector<VulnAlert> check_patr(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy);
std::vector<VulnAlert> check_ides(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy);
std::vector<VulnAlert> check_xxe(const FeedbackRecord& fb, const Candidate& c, const VulnCheckPolicy& policy);
std::vector<VulnAlert> check_xss(const Candidate& c, const VulnCheckPolicy& policy = {});
std::vector<VulnAlert> check_opre(const Candidate& c, const VulnCheckPolicy& policy = {});

// One detection rule.
struct VulnCheck {
  VulnClass vuln_class;
  std::vector<VulnAlert> (*run)(const Candidate&, const FeedbackRecord&, const VulnCheckPolicy&);
};

// The rules for all seven classes.
std::vector<VulnCheck> default_checks();

// Applies a set of checks under one policy.
class VulnChecker {
 public:
  explicit VulnChecker(VulnCheckPolicy policy, std::vector<VulnCheck> checks = default_checks());

  std::vector<VulnAlert> check(const Candidate& c, const FeedbackRecord& fb) const;
  const VulnCheckPolicy& policy() const { return policy_; }

 private:
  VulnCheckPolicy policy_;
  std::vector<VulnCheck> checks_;
};

std::vector<VulnAlert> run_checks(const Candidate& c, const FeedbackRecord& fb, const VulnCheckPolicy& policy);

// Identity used to report an issue once: class, evidence origin (hook function
// or response kind) and the names of the matched parameters.
std::string alert_key(const VulnAlert& a);

}  // namespace webphuzz::detect
