#include "webphuzz/feedback.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "webphuzz/error.hpp"

namespace webphuzz::feedback {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Schema violations are reported at the end of the document: the JSON itself
// was well-formed, so there is no better position to point at.
[[noreturn]] void schema_error(const std::string& what, std::string_view bytes) {
  throw ParseError("feedback schema: " + what, bytes.size());
}

const json& member(const json& obj, const char* key, std::string_view bytes) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(std::string("missing '") + key + "'", bytes);
  return *it;
}

std::string get_string(const json& obj, const char* key, std::string_view bytes) {
  const auto& v = member(obj, key, bytes);
  if (!v.is_string()) schema_error(std::string("'") + key + "' must be a string", bytes);
  return v.get<std::string>();
}

int get_line(const json& obj, const char* key, std::string_view bytes) {
  const auto& v = member(obj, key, bytes);
  if (!v.is_number_integer()) schema_error(std::string("'") + key + "' must be an integer", bytes);
  return v.get<int>();
}

const json& get_array(const json& obj, const char* key, std::string_view bytes) {
  const auto& v = member(obj, key, bytes);
  if (!v.is_array()) schema_error(std::string("'") + key + "' must be an array", bytes);
  return v;
}

std::optional<std::string> nullable_string(const json& obj, const char* key, std::string_view bytes) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_error(std::string("'") + key + "' must be a string or null", bytes);
  return it->get<std::string>();
}

HookEvent parse_hook(const json& h, std::string_view bytes) {
  if (!h.is_object()) schema_error("hook entry must be an object", bytes);
  HookEvent ev;
  ev.function = get_string(h, "function", bytes);
  for (const auto& a : get_array(h, "args", bytes)) {
    if (!a.is_string()) schema_error("hook args must be strings", bytes);
    auto arg = a.get<std::string>();
    if (arg.size() > kMaxHookArgBytes) arg.resize(kMaxHookArgBytes);
    ev.args.push_back(std::move(arg));
  }
  ev.error = nullable_string(h, "error", bytes);
  if (auto it = h.find("exception"); it != h.end() && !it->is_null()) {
    if (!it->is_object()) schema_error("'exception' must be an object or null", bytes);
    ev.exception = HookException{get_string(*it, "class", bytes), get_string(*it, "message", bytes)};
  }
  if (auto it = h.find("returned_false"); it != h.end()) {
    if (!it->is_boolean()) schema_error("'returned_false' must be a boolean", bytes);
    ev.returned_false = it->get<bool>();
  }
  return ev;
}

// Invalid UTF-8 in hook arguments is replaced rather than rejected; the shim
// may capture arbitrary bytes.
std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

}  // namespace

FeedbackRecord parse_feedback(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  if (!doc.is_object()) schema_error("top level must be an object", bytes);

  FeedbackRecord fb;
  fb.id = get_string(doc, "id", bytes);

  const auto& coverage = member(doc, "coverage", bytes);
  if (!coverage.is_object()) schema_error("'coverage' must be an object", bytes);
  for (const auto& [file, lines] : coverage.items()) {
    if (!lines.is_array()) schema_error("coverage lines must be an array", bytes);
    auto& out = fb.coverage[file];
    for (const auto& l : lines) {
      if (!l.is_number_integer() || l.get<long long>() < 1 || l.get<long long>() > INT32_MAX)
        schema_error("coverage line numbers must be positive integers", bytes);
      out.push_back(l.get<int>());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }

  for (const auto& h : get_array(doc, "hooks", bytes)) fb.hook_events.push_back(parse_hook(h, bytes));

  for (const auto& e : get_array(doc, "php_errors", bytes)) {
    if (!e.is_object()) schema_error("php_errors entries must be objects", bytes);
    fb.php_errors.push_back({get_string(e, "message", bytes), get_string(e, "file", bytes),
                             get_line(e, "line", bytes)});
  }
  for (const auto& e : get_array(doc, "php_exceptions", bytes)) {
    if (!e.is_object()) schema_error("php_exceptions entries must be objects", bytes);
    fb.php_exceptions.push_back({get_string(e, "class", bytes), get_string(e, "message", bytes),
                                 get_string(e, "file", bytes), get_line(e, "line", bytes)});
  }

  auto termination = get_string(doc, "termination", bytes);
  auto t = parse_termination(termination);
  if (!t) schema_error("unknown termination '" + termination + "'", bytes);
  fb.termination = *t;
  return fb;
}

std::string serialize_feedback(const FeedbackRecord& fb) {
  json doc;
  doc["id"] = fb.id;
  doc["coverage"] = json::object();
  for (const auto& [file, lines] : fb.coverage) doc["coverage"][file] = lines;
  doc["hooks"] = json::array();
  for (const auto& ev : fb.hook_events) {
    json h;
    h["function"] = ev.function;
    h["args"] = ev.args;
    h["error"] = ev.error ? json(*ev.error) : json(nullptr);
    h["exception"] = ev.exception
                         ? json{{"class", ev.exception->class_name}, {"message", ev.exception->message}}
                         : json(nullptr);
    h["returned_false"] = ev.returned_false;
    doc["hooks"].push_back(std::move(h));
  }
  doc["php_errors"] = json::array();
  for (const auto& e : fb.php_errors)
    doc["php_errors"].push_back({{"message", e.message}, {"file", e.file}, {"line", e.line}});
  doc["php_exceptions"] = json::array();
  for (const auto& e : fb.php_exceptions)
    doc["php_exceptions"].push_back(
        {{"class", e.class_name}, {"message", e.message}, {"file", e.file}, {"line", e.line}});
  doc["termination"] = std::string(to_string(fb.termination));
  return dump(doc);
}

fs::path feedback_path(const fs::path& shared_dir, std::string_view id) {
  return shared_dir / (std::string(id) + ".json");
}

void write_feedback_file(const fs::path& shared_dir, const FeedbackRecord& fb) {
  auto final_path = feedback_path(shared_dir, fb.id);
  auto tmp_path = final_path;
  tmp_path += ".tmp";
  auto text = serialize_feedback(fb);

  int fd = ::open(tmp_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("open " + tmp_path.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < text.size()) {
    auto n = ::write(fd, text.data() + done, text.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      int err = errno;
      ::close(fd);
      ::unlink(tmp_path.c_str());
      throw IoError("write " + tmp_path.string() + ": " + std::strerror(err));
    }
    done += static_cast<std::size_t>(n);
  }
  ::close(fd);
  if (::rename(tmp_path.c_str(), final_path.c_str()) != 0) {
    int err = errno;
    ::unlink(tmp_path.c_str());
    throw IoError("rename " + final_path.string() + ": " + std::strerror(err));
  }
}

namespace {

std::optional<std::string> read_whole(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void quarantine(const fs::path& shared_dir, const fs::path& file) {
  std::error_code ec;
  auto bad = shared_dir / kQuarantineDir;
  fs::create_directories(bad, ec);
  fs::rename(file, bad / file.filename(), ec);
  if (ec) fs::remove(file, ec);
}

}  // namespace

CollectResult collect(std::string_view id, const fs::path& shared_dir, std::chrono::milliseconds wait) {
  auto path = feedback_path(shared_dir, id);
  auto deadline = std::chrono::steady_clock::now() + wait;
  auto pause = std::chrono::microseconds(200);

  std::optional<std::string> text;
  for (;;) {
    text = read_whole(path);
    if (text || std::chrono::steady_clock::now() >= deadline) break;
    std::this_thread::sleep_for(pause);
    pause = std::min<std::chrono::microseconds>(pause * 2, std::chrono::milliseconds(20));
  }

  CollectResult result;
  if (!text) return result;
  try {
    result.record = parse_feedback(*text);
    result.status = CollectStatus::ok;
    std::error_code ec;
    fs::remove(path, ec);
  } catch (const ParseError& e) {
    result.status = CollectStatus::malformed;
    result.error = e.what();
    quarantine(shared_dir, path);
  }
  return result;
}

std::string make_feedback_id(std::mt19937_64& rng, std::int64_t unix_seconds) {
  static constexpr char hex[] = "0123456789abcdef";
  std::uint64_t hi = rng(), lo = rng();
  unsigned char b[16];
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<unsigned char>(hi >> (56 - 8 * i));
    b[8 + i] = static_cast<unsigned char>(lo >> (56 - 8 * i));
  }
  b[6] = static_cast<unsigned char>((b[6] & 0x0F) | 0x40);  // version 4
  b[8] = static_cast<unsigned char>((b[8] & 0x3F) | 0x80);  // RFC 4122 variant

  std::string out = std::to_string(unix_seconds) + "-";
  for (int i = 0; i < 16; ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) out += '-';
    out += hex[b[i] >> 4];
    out += hex[b[i] & 0xF];
  }
  return out;
}

}  // namespace webphuzz::feedback
