#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "webphuzz/model.hpp"
#include "webphuzz/store.hpp"

namespace webphuzz::mutation {

using Rng = std::mt19937_64;

inline constexpr std::size_t kMaxValueBytes = 64 * 1024;
inline constexpr std::size_t kMaxInitialCandidates = 1024;

struct MutationBudget {
  std::uint32_t energy = 1;
  std::uint64_t rng_seed = 0;
};

// Probabilities of the special mutators, drawn in this order before falling
// back to a uniformly chosen generic mutator.
struct SpecialRates {
  double patr = 0.05;
  double xss = 1.0 / 20.0;
  double protocol = 1.0 / 40.0;
};

inline constexpr std::string_view kProtocolPrefixes[] = {"http://", "https://", "ftp://"};
inline constexpr std::string_view kPathTraversalPayloads[] = {"../", "/etc/passwd"};
// TOKEN is replaced by a fresh marker token.
inline constexpr std::string_view kXssTemplates[] = {
    "<script>TOKEN()</script>",
    "\"><img src=x onerror=TOKEN()>",
    "'onmouseover='TOKEN()",
};

// Result of one parameter mutation. `payload` is set for special mutators and
// is a verbatim substring of `value`; `token` only for xss payloads.
struct ParamMutation {
  std::string value;
  MutatorKind applied = MutatorKind::insert_char;  // after digit/swap fallbacks
  std::optional<std::string> payload;
  std::optional<std::string> token;
};

// `fz` followed by 8 lowercase hex digits.
std::string make_marker_token(Rng& rng);
bool is_marker_token(std::string_view text);

ParamMutation mutate_param_detailed(std::string_view value, MutatorKind kind, Rng& rng);
std::string mutate_param(std::string_view value, MutatorKind kind, Rng& rng);

// Initial candidates: methods x seed choices of every fuzz parameter, in
// product order, truncated to kMaxInitialCandidates. Login cookies are left for
// the campaign to fill in.
std::vector<Candidate> expand_seeds(std::shared_ptr<const EndpointConfig> cfg);

// Draws the mutator for one child.
MutatorKind draw_mutator(Rng& rng, const SpecialRates& rates = {});

// Up to `budget.energy` children, each differing from the parent in exactly
// one fuzz parameter. Children whose hash `dedup` already knows are dropped.
std::vector<Candidate> mutate_candidate(const Candidate& parent, const MutationBudget& budget,
                                        const GlobalCoverageStore& dedup,
                                        const SpecialRates& rates = {});

}  // namespace webphuzz::mutation
