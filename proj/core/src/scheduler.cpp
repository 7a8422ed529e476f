#include "webphuzz/scheduler.hpp"

#include <algorithm>

#include "webphuzz/error.hpp"

namespace webphuzz::sched {

ScoreReport score_candidate(const FeedbackRecord& fb, GlobalCoverageStore& store) {
  return store.merge(fb);
}

mutation::MutationBudget assign_energy(const ScoreReport& s, std::uint64_t rng_seed) {
  std::uint64_t e = std::clamp<std::uint64_t>(kMinEnergy + s.score, kMinEnergy, kMaxEnergy);
  return {static_cast<std::uint32_t>(e), rng_seed};
}

CandidatePool::CandidatePool(SelectionStrategy strategy, std::uint64_t rng_seed)
    : strategy_(strategy), rng_(rng_seed) {}

bool CandidatePool::admits(const ScoreReport& report) const {
  return strategy_ == SelectionStrategy::random || report.score > 0;
}

std::uint64_t CandidatePool::add(Candidate c, const ScoreReport& report) {
  PoolEntry e;
  e.id = next_id_++;
  e.order = e.id;
  c.response.reset();  // responses are only needed while checking
  c.score = report.score;
  e.candidate = std::move(c);
  e.report = report;
  entries_.push_back(std::move(e));
  return entries_.back().id;
}

const PoolEntry& CandidatePool::select_next() {
  if (entries_.empty()) throw EmptyPool();
  if (strategy_ == SelectionStrategy::random) {
    std::uniform_int_distribution<std::size_t> pick(0, entries_.size() - 1);
    return entries_[pick(rng_)];
  }
  auto better = [](const PoolEntry& a, const PoolEntry& b) {
    if (a.demotions != b.demotions) return a.demotions < b.demotions;
    if (a.report.score != b.report.score) return a.report.score > b.report.score;
    return a.order < b.order;
  };
  const PoolEntry* best = &entries_.front();
  for (const auto& e : entries_) {
    if (better(e, *best)) best = &e;
  }
  return *best;
}

bool CandidatePool::mark_exhausted(std::uint64_t id, std::span<const ScoreReport> children_scores) {
  bool fruitless = std::all_of(children_scores.begin(), children_scores.end(),
                               [](const ScoreReport& r) { return r.score == 0; });
  if (!fruitless) return false;
  if (id < entries_.size()) ++entries_[id].demotions;
  return true;
}

std::uint32_t CandidatePool::energy_for(const PoolEntry& entry) const {
  if (strategy_ == SelectionStrategy::random) return kMinEnergy;
  return assign_energy(entry.report).energy;
}

const PoolEntry* CandidatePool::find(std::uint64_t id) const {
  // ids are dense and entries are never removed
  if (id < entries_.size() && entries_[id].id == id) return &entries_[id];
  return nullptr;
}

}  // namespace webphuzz::sched
