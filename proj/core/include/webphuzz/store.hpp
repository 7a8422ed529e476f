#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "webphuzz/model.hpp"

namespace webphuzz {

namespace detail {

// Owning POSIX file descriptor.
class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  UniqueFd(UniqueFd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;
  ~UniqueFd() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset();

 private:
  int fd_ = -1;
};

}  // namespace detail

// Coverage delta of one feedback record against the store.
struct ScoreReport {
  std::uint64_t new_files = 0;
  std::uint64_t new_lines = 0;
  std::uint64_t score = 0;  // 10 * new_files + new_lines

  bool operator==(const ScoreReport&) const = default;
};

inline constexpr std::uint64_t kNewFileWeight = 10;

// Cumulative (file, line) coverage and evaluated-candidate hashes. Both sets
// only ever grow. With a persist directory, `sync()` exchanges entries with
// other instances through per-instance append-only logs:
//
//   <persist_dir>/hashes/<instance-id>.log     one 64-hex hash per line
//   <persist_dir>/coverage/<instance-id>.log   `file<TAB>line` per line, line 0
//                                              for a file reported without lines
//
// Instances only ever append to their own log and read everybody else's, so no
// cross-process locking is needed. A trailing line without '\n' is treated as
// not yet written.
class GlobalCoverageStore {
 public:
  GlobalCoverageStore() = default;
  GlobalCoverageStore(std::filesystem::path persist_dir, std::string instance_id);

  GlobalCoverageStore(const GlobalCoverageStore&) = delete;
  GlobalCoverageStore& operator=(const GlobalCoverageStore&) = delete;
  GlobalCoverageStore(GlobalCoverageStore&&) noexcept = default;
  GlobalCoverageStore& operator=(GlobalCoverageStore&&) noexcept = default;

  bool has_hash(std::string_view hash) const;
  // Returns false if the hash was already known.
  bool insert_hash(const std::string& hash);

  bool is_covered(const std::string& file, int line) const;
  bool knows_file(const std::string& file) const;

  // Report against the current contents, then merge the record in.
  ScoreReport merge(const FeedbackRecord& fb);

  std::size_t hash_count() const { return seen_hashes_.size(); }
  std::size_t line_count() const { return covered_count_; }
  std::size_t file_count() const { return covered_.size(); }
  const std::unordered_set<std::string>& seen_hashes() const { return seen_hashes_; }

  const std::filesystem::path& persist_dir() const { return persist_dir_; }
  const std::string& instance_id() const { return instance_id_; }
  bool persistent() const { return !persist_dir_.empty(); }

  // Append this instance's unsynced entries, then merge every other instance's
  // log. Throws IoError; entries that failed to flush stay queued.
  void sync();

 private:
  struct Tail {
    std::uint64_t offset = 0;
  };

  void add_line(const std::string& file, int line, bool from_peer);
  void flush_pending();
  void read_peers(const std::string& subdir, bool hashes);

  std::filesystem::path persist_dir_;
  std::string instance_id_ = "local";

  std::unordered_set<std::string> seen_hashes_;
  std::map<std::string, std::set<int>> covered_;
  std::size_t covered_count_ = 0;

  std::vector<std::string> pending_hashes_;
  std::vector<std::string> pending_coverage_;
  detail::UniqueFd hash_fd_;
  detail::UniqueFd coverage_fd_;
  std::map<std::filesystem::path, Tail> tails_;
};

// Validates one log line; used by sync and by tests that inspect the files.
bool is_hash_record(std::string_view line);
bool parse_coverage_record(std::string_view line, std::string& file, int& lineno);

}  // namespace webphuzz
