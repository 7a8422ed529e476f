#pragma once

// Stand-in for a small PHP script with seven nested sinks, selected by the
// first two characters of `m` and fed with `d`:
//
//    1  $m = $_GET['m']; $d = $_GET['d'];
//    2  if m[0] == 'm'
//    3    if m[1] == 's'      4-5  mysqli_query("SELECT * FROM t WHERE id =  $d")
//    7    if m[1] == 'r'      8    system("echo $d")
//   10    if m[1] == 'u'     11    unserialize($d)
//   13    if m[1] == 'f'     14    file_get_contents($d)
//   16    if m[1] == 'e'     17-18 (new DOMDocument)->loadXML($d, LIBXML_NOENT)
//   20    if m[1] == 'x'     21    echo $d
//   23    if m[1] == 'o'     24    header("Location: $d")
//
// Each request yields the line coverage of `vuln.php` it reaches plus hook
// events with simulated MySQL, dash, unserialize, filesystem and libxml
// behaviour, written to the shared directory like the PHP shim would.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "webphuzz/model.hpp"
#include "webphuzz/request.hpp"

namespace webphuzz::mock {

inline constexpr std::string_view kScriptFile = "vuln.php";
inline constexpr std::string_view kPath = "/vuln";
inline constexpr int kSinkLines[] = {4, 8, 11, 14, 18, 21, 24};
inline constexpr std::string_view kDocumentRoot = "/var/www/html";

struct MockResponse {
  int status = 200;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  FeedbackRecord feedback;
};

// The whole script as a pure function of its inputs.
MockResponse handle(std::string_view m, std::string_view d, std::string_view feedback_id);

// Which of kSinkLines a coverage record reaches.
std::vector<int> sinks_reached(const FeedbackRecord& fb);

// Simulated sink outcomes; nullopt means the call succeeded.
std::optional<std::string> mysql_error(std::string_view query);
std::optional<std::string> dash_error(std::string_view command);

struct UnserializeResult {
  std::optional<std::string> error;
  bool returned_false = false;
};
UnserializeResult php_unserialize(std::string_view data);

struct CallResult {
  std::optional<std::string> error;
  std::optional<HookException> exception;
  bool returned_false = false;
};
CallResult file_get_contents(std::string_view path);
CallResult load_xml(std::string_view xml);

// Lexical normalisation against kDocumentRoot (no symlinks).
std::string normalize_path(std::string_view path);

// Answers prepared requests by calling `handle` directly and writing the
// feedback file into `shared_dir`; no sockets involved.
class InProcessTransport final : public http::Transport {
 public:
  explicit InProcessTransport(std::filesystem::path shared_dir);
  ResponseSummary execute(const http::PreparedRequest& r, double timeout_s) override;

 private:
  std::filesystem::path shared_dir_;
};

// HTTP server for the same script on 127.0.0.1.
class MockServer {
 public:
  MockServer(std::filesystem::path shared_dir, int port = 0, std::size_t threads = 16);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds and starts serving in the background. Throws IoError.
  void start();
  void stop();
  // Serves on the calling thread until stop().
  void run();

  int port() const { return port_; }
  std::string origin() const;
  std::uint64_t requests_served() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_;
};

}  // namespace webphuzz::mock
