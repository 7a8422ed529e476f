#pragma once

// Per-request feedback files. The instrumented target writes
// `<shared_dir>/<id>.json.tmp`, renames it to `<id>.json`, and the fuzzer
// picks it up after the response arrives:
//
//   { "id": "...",
//     "coverage": { "<file>": [line, ...] },
//     "hooks": [ { "function": "...", "args": ["..."], "error": str|null,
//                  "exception": {"class": "...", "message": "..."}|null,
//                  "returned_false": bool } ],
//     "php_errors": [ {"message": "...", "file": "...", "line": n} ],
//     "php_exceptions": [ {"class": "...", "message": "...", "file": "...", "line": n} ],
//     "termination": "normal"|"exit"|"error"|"shutdown" }
//
// Unknown fields are ignored.

#include <chrono>
#include <filesystem>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "webphuzz/model.hpp"

namespace webphuzz::feedback {

inline constexpr std::chrono::milliseconds kDefaultWait{2000};
inline constexpr std::string_view kQuarantineDir = "bad";

// Throws ParseError. Coverage lines come back sorted and unique; hook
// arguments longer than kMaxHookArgBytes are truncated.
FeedbackRecord parse_feedback(std::string_view bytes);

std::string serialize_feedback(const FeedbackRecord& fb);

std::filesystem::path feedback_path(const std::filesystem::path& shared_dir, std::string_view id);

// tmp + rename, so readers never see a partial file. Throws IoError.
void write_feedback_file(const std::filesystem::path& shared_dir, const FeedbackRecord& fb);

enum class CollectStatus { ok, missing, malformed };

struct CollectResult {
  CollectStatus status = CollectStatus::missing;
  std::optional<FeedbackRecord> record;
  std::string error;  // parse error text for `malformed`
};

// Waits up to `wait` for `<shared_dir>/<id>.json`, parses and deletes it.
// Malformed files are moved to `<shared_dir>/bad/`.
CollectResult collect(std::string_view id, const std::filesystem::path& shared_dir,
                      std::chrono::milliseconds wait = kDefaultWait);

// `<unix-seconds>-<UUIDv4>`.
std::string make_feedback_id(std::mt19937_64& rng, std::int64_t unix_seconds);

}  // namespace webphuzz::feedback
