#include "webphuzz/store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstring>

#include "webphuzz/error.hpp"

namespace fs = std::filesystem;

namespace webphuzz {

namespace detail {

void UniqueFd::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

}  // namespace detail

namespace {

constexpr std::size_t kMaxWrite = 4096;

std::string errno_text(const std::string& what, const fs::path& path) {
  return what + " " + path.string() + ": " + std::strerror(errno);
}

// Opens `path` for appending after cutting any partial trailing record left by
// a previous crash of this instance.
detail::UniqueFd open_own_log(const fs::path& path) {
  detail::UniqueFd fd(::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644));
  if (!fd) throw IoError(errno_text("cannot open", path));
  struct stat st {};
  if (::fstat(fd.get(), &st) != 0) throw IoError(errno_text("cannot stat", path));
  off_t size = st.st_size;
  off_t keep = size;
  char c = 0;
  while (keep > 0) {
    if (::pread(fd.get(), &c, 1, keep - 1) != 1) throw IoError(errno_text("cannot read", path));
    if (c == '\n') break;
    --keep;
  }
  if (keep != size && ::ftruncate(fd.get(), keep) != 0)
    throw IoError(errno_text("cannot truncate", path));
  return fd;
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(errno_text("cannot append to", path));
    }
    done += static_cast<std::size_t>(n);
  }
}

// Writes whole records in chunks of at most kMaxWrite bytes, one write() each.
// Returns how many records were written before a failure.
std::size_t append_records(int fd, const std::vector<std::string>& records, const fs::path& path) {
  std::string chunk;
  std::size_t written = 0;
  std::size_t in_chunk = 0;
  auto flush = [&] {
    if (chunk.empty()) return;
    write_all(fd, chunk, path);
    written += in_chunk;
    chunk.clear();
    in_chunk = 0;
  };
  for (const auto& r : records) {
    if (!chunk.empty() && chunk.size() + r.size() + 1 > kMaxWrite) flush();
    chunk += r;
    chunk += '\n';
    ++in_chunk;
  }
  flush();
  return written;
}

}  // namespace

bool is_hash_record(std::string_view line) {
  if (line.size() != 64) return false;
  for (char c : line) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

bool parse_coverage_record(std::string_view line, std::string& file, int& lineno) {
  auto tab = line.rfind('\t');
  if (tab == std::string_view::npos || tab == 0) return false;
  auto num = line.substr(tab + 1);
  int value = 0;
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
  if (ec != std::errc() || ptr != num.data() + num.size() || value < 0) return false;
  file.assign(line.substr(0, tab));
  lineno = value;
  return true;
}

GlobalCoverageStore::GlobalCoverageStore(fs::path persist_dir, std::string instance_id)
    : persist_dir_(std::move(persist_dir)), instance_id_(std::move(instance_id)) {
  if (persist_dir_.empty()) return;
  std::error_code ec;
  fs::create_directories(persist_dir_ / "hashes", ec);
  fs::create_directories(persist_dir_ / "coverage", ec);
  if (ec) throw IoError("cannot create " + persist_dir_.string() + ": " + ec.message());

  auto own_hashes = persist_dir_ / "hashes" / (instance_id_ + ".log");
  auto own_coverage = persist_dir_ / "coverage" / (instance_id_ + ".log");
  hash_fd_ = open_own_log(own_hashes);
  coverage_fd_ = open_own_log(own_coverage);

  // Own logs are read once here (resume after restart); afterwards only peers.
  read_peers("hashes", true);
  read_peers("coverage", false);
}

bool GlobalCoverageStore::has_hash(std::string_view hash) const {
  return seen_hashes_.count(std::string(hash)) != 0;
}

bool GlobalCoverageStore::insert_hash(const std::string& hash) {
  if (!seen_hashes_.insert(hash).second) return false;
  if (persistent()) pending_hashes_.push_back(hash);
  return true;
}

bool GlobalCoverageStore::is_covered(const std::string& file, int line) const {
  auto it = covered_.find(file);
  return it != covered_.end() && it->second.count(line) != 0;
}

bool GlobalCoverageStore::knows_file(const std::string& file) const {
  return covered_.count(file) != 0;
}

void GlobalCoverageStore::add_line(const std::string& file, int line, bool from_peer) {
  if (line == 0) {
    // file seen without any covered line
    bool added = covered_.emplace(file, std::set<int>{}).second;
    if (added && !from_peer && persistent() && file.find_first_of("\t\n") == std::string::npos)
      pending_coverage_.push_back(file + "\t0");
    return;
  }
  if (!covered_[file].insert(line).second) return;
  ++covered_count_;
  if (!from_peer && persistent() && file.find_first_of("\t\n") == std::string::npos)
    pending_coverage_.push_back(file + "\t" + std::to_string(line));
}

ScoreReport GlobalCoverageStore::merge(const FeedbackRecord& fb) {
  ScoreReport report;
  for (const auto& [file, lines] : fb.coverage) {
    auto it = covered_.find(file);
    if (it == covered_.end()) {
      ++report.new_files;
      if (lines.empty()) add_line(file, 0, false);
      it = covered_.emplace(file, std::set<int>{}).first;
    }
    for (int line : lines) {
      if (it->second.count(line) == 0) {
        ++report.new_lines;
        add_line(file, line, false);
      }
    }
  }
  report.score = kNewFileWeight * report.new_files + report.new_lines;
  return report;
}

void GlobalCoverageStore::flush_pending() {
  auto flush = [this](detail::UniqueFd& fd, std::vector<std::string>& pending, const char* sub) {
    if (pending.empty()) return;
    auto path = persist_dir_ / sub / (instance_id_ + ".log");
    // On failure everything stays queued; re-appending a record is harmless.
    std::size_t n = append_records(fd.get(), pending, path);
    pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(n));
  };
  flush(hash_fd_, pending_hashes_, "hashes");
  flush(coverage_fd_, pending_coverage_, "coverage");
}

void GlobalCoverageStore::read_peers(const std::string& subdir, bool hashes) {
  std::error_code ec;
  fs::directory_iterator it(persist_dir_ / subdir, ec);
  if (ec) throw IoError("cannot list " + (persist_dir_ / subdir).string() + ": " + ec.message());

  std::string buffer;
  std::string file;
  int lineno = 0;
  for (const auto& entry : it) {
    const auto& path = entry.path();
    if (path.extension() != ".log") continue;
    auto [tail_it, fresh] = tails_.try_emplace(path);
    bool own = path.stem() == instance_id_;
    if (own && !fresh) continue;

    detail::UniqueFd fd(::open(path.c_str(), O_RDONLY | O_CLOEXEC));
    if (!fd) continue;  // peer may be mid-creation
    struct stat st {};
    if (::fstat(fd.get(), &st) != 0) continue;
    auto size = static_cast<std::uint64_t>(st.st_size);
    auto& tail = tail_it->second;
    if (size < tail.offset) tail.offset = 0;
    if (size == tail.offset) continue;

    buffer.resize(size - tail.offset);
    ssize_t got = ::pread(fd.get(), buffer.data(), buffer.size(), static_cast<off_t>(tail.offset));
    if (got <= 0) continue;
    buffer.resize(static_cast<std::size_t>(got));
    auto last_newline = buffer.rfind('\n');
    if (last_newline == std::string::npos) continue;

    std::string_view view(buffer.data(), last_newline + 1);
    std::size_t pos = 0;
    while (pos < view.size()) {
      auto nl = view.find('\n', pos);
      auto line = view.substr(pos, nl - pos);
      pos = nl + 1;
      if (hashes) {
        if (is_hash_record(line)) seen_hashes_.emplace(line);
      } else if (parse_coverage_record(line, file, lineno)) {
        add_line(file, lineno, true);
      }
    }
    tail.offset += last_newline + 1;
  }
}

void GlobalCoverageStore::sync() {
  if (!persistent()) return;
  flush_pending();
  read_peers("hashes", true);
  read_peers("coverage", false);
}

}  // namespace webphuzz
