#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "webphuzz/model.hpp"
#include "webphuzz/mutation.hpp"
#include "webphuzz/store.hpp"

namespace webphuzz::sched {

inline constexpr std::uint32_t kMinEnergy = 5;
inline constexpr std::uint32_t kMaxEnergy = 50;

// Coverage gain of `fb` against `store`; merges `fb` afterwards.
ScoreReport score_candidate(const FeedbackRecord& fb, GlobalCoverageStore& store);

// E = clamp(5 + score, 5, 50).
mutation::MutationBudget assign_energy(const ScoreReport& s, std::uint64_t rng_seed = 0);

enum class SelectionStrategy {
  // Highest score first; fruitless candidates are demoted.
  coverage_guided,
  // Ablation baseline: uniform choice, every evaluated candidate admitted,
  // constant energy.
  random,
};

struct PoolEntry {
  std::uint64_t id = 0;
  Candidate candidate;
  ScoreReport report;
  std::uint64_t order = 0;      // insertion sequence, FIFO tie-break
  std::uint32_t demotions = 0;  // rounds that found nothing new
};

// Candidates waiting to be mutated. Selection order is (fewest demotions,
// highest score, earliest insertion); exhausted candidates sink below every
// candidate that has not been demoted as often, but are never removed.
class CandidatePool {
 public:
  explicit CandidatePool(SelectionStrategy strategy = SelectionStrategy::coverage_guided,
                         std::uint64_t rng_seed = 0);

  // Whether a freshly evaluated child belongs in the pool.
  bool admits(const ScoreReport& report) const;

  std::uint64_t add(Candidate c, const ScoreReport& report);

  // Throws EmptyPool.
  const PoolEntry& select_next();

  // True iff every child of the latest round scored 0; the entry is then
  // demoted. An empty round counts as fruitless.
  bool mark_exhausted(std::uint64_t id, std::span<const ScoreReport> children_scores);

  std::uint32_t energy_for(const PoolEntry& entry) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<PoolEntry>& entries() const { return entries_; }
  const PoolEntry* find(std::uint64_t id) const;
  SelectionStrategy strategy() const { return strategy_; }

 private:
  SelectionStrategy strategy_;
  std::mt19937_64 rng_;
  std::vector<PoolEntry> entries_;
  std::uint64_t next_id_ = 0;
};

}  // namespace webphuzz::sched
