#include "detection_matrix.hpp"

#include <algorithm>
#include <random>

#include "support.hpp"
#include "webphuzz/detection.hpp"
#include "webphuzz/hooks.hpp"
#include "webphuzz/mock_target.hpp"

namespace webphuzz::testing {

namespace {

using detect::CheckMode;
using detect::VulnCheckPolicy;

ParamKey q(const char* name) { return {ParamLocation::query, name}; }

VulnCheckPolicy param_based() { return {}; }
VulnCheckPolicy default_mode() {
  VulnCheckPolicy p;
  p.mode = CheckMode::default_mode;
  return p;
}

Candidate mock_candidate(const std::string& m, const std::string& d) {
  return make_candidate(mock_config(), {{q("m"), m}, {q("d"), d}});
}

FeedbackRecord with_hook(HookEvent ev) {
  FeedbackRecord fb;
  fb.id = "t";
  fb.hook_events.push_back(std::move(ev));
  return fb;
}

HookEvent hook(std::string function, std::vector<std::string> args, std::optional<std::string> error = std::nullopt,
               bool returned_false = false) {
  HookEvent ev;
  ev.function = std::move(function);
  ev.args = std::move(args);
  ev.error = std::move(error);
  ev.returned_false = returned_false;
  return ev;
}

std::string describe(const std::vector<VulnAlert>& alerts) {
  std::string out = std::to_string(alerts.size()) + " alert(s)";
  for (const auto& a : alerts) out += " " + std::string(to_string(a.vuln_class)) + "/" + std::string(to_string(a.confidence));
  return out;
}

class Matrix {
 public:
  // Expects exactly `count` alerts, all of class `cls` with `confidence`.
  void expect(std::string name, const std::vector<VulnAlert>& alerts, std::size_t count, VulnClass cls = VulnClass::sqli,
              Confidence confidence = Confidence::confirmed_param_flow) {
    bool ok = alerts.size() == count && std::all_of(alerts.begin(), alerts.end(), [&](const VulnAlert& a) {
                return a.vuln_class == cls && a.confidence == confidence;
              });
    rows_.push_back({std::move(name), ok, ok ? "" : describe(alerts)});
  }
  void expect_true(std::string name, bool ok, std::string detail) {
    rows_.push_back({std::move(name), ok, ok ? "" : std::move(detail)});
  }
  std::vector<MatrixRow> rows() && { return std::move(rows_); }

 private:
  std::vector<MatrixRow> rows_;
};

}  // namespace

std::vector<MatrixRow> detection_matrix() {
  Matrix mx;

  // run_checks
  {
    auto c = mock_candidate("ms", "1'");
    auto fb = mock::handle("ms", "1'", "id").feedback;
    mx.expect("run_checks: mysqli_query error with fuzz flow -> one sqli, confirmed", detect::run_checks(c, fb, param_based()), 1);
    auto other = mock_candidate("ms", "7777");
    mx.expect("run_checks: same record without flow, param_based -> none", detect::run_checks(other, fb, param_based()), 0);
    mx.expect("run_checks: same record without flow, default -> one sqli, heuristic",
              detect::run_checks(other, fb, default_mode()), 1, VulnClass::sqli, Confidence::heuristic);
    auto plain = mock_candidate("zz", "fuzz");
    plain.response = ResponseSummary{200, {}, "<html></html>", false};
    auto empty = detect::run_checks(plain, FeedbackRecord{}, param_based());
    auto empty_default = detect::run_checks(plain, FeedbackRecord{}, default_mode());
    empty.insert(empty.end(), empty_default.begin(), empty_default.end());
    mx.expect("run_checks: empty record, status 200 -> none", empty, 0);
  }

  // sqli
  {
    auto query = std::string("SELECT * FROM t WHERE id = 1'");
    auto error = mock::mysql_error(query);
    auto c = mock_candidate("ms", "1'");
    mx.expect("sqli: MySQL syntax error -> alert",
              detect::check_sqli(with_hook(hook("mysqli_query", {query}, error, true)), c, param_based()), 1);
    auto quiet = with_hook(hook("mysqli_query", {query}, std::nullopt, true));
    auto a = detect::check_sqli(quiet, c, param_based());
    auto b = detect::check_sqli(quiet, c, default_mode());
    a.insert(a.end(), b.begin(), b.end());
    mx.expect("sqli: returned_false without error text -> none", a, 0);
    auto pdo = hook("PDO::exec", {"DELETE FROM t WHERE name = 'fu'zz'"});
    pdo.exception = HookException{"PDOException", "SQLSTATE[42000]: Syntax error or access violation: 1064"};
    mx.expect("sqli: PDO::exec raising PDOException -> alert",
              detect::check_sqli(with_hook(pdo), mock_candidate("ms", "fu'zz"), param_based()), 1);
  }

  // rce
  {
    auto cmd = std::string("echo fu'zz");
    auto err = mock::dash_error(cmd);
    mx.expect_true("rce: mock shell reports the unterminated quote",
                   err && *err == "sh: 1: Syntax error: Unterminated quoted string", err.value_or("<none>"));
    mx.expect("rce: unterminated quoted string on stderr -> alert",
              detect::check_rce(with_hook(hook("system", {cmd}, err)), mock_candidate("mr", "fu'zz"), param_based()), 1,
              VulnClass::rce);
    auto clean = mock::dash_error("echo hello");
    mx.expect("rce: echo hello, clean exit -> none",
              detect::check_rce(with_hook(hook("system", {"echo hello"}, clean)), mock_candidate("mr", "hello"),
                                default_mode()),
              0);
    mx.expect("rce: 'fuzzcmd: not found' -> alert",
              detect::check_rce(with_hook(hook("system", {"fuzzcmd"}, "sh: 1: fuzzcmd: not found")),
                                mock_candidate("mr", "fuzzcmd"), param_based()),
              1, VulnClass::rce);
  }

  // patr
  {
    auto c = mock_candidate("mf", "../../etc/passwd");
    mx.expect("patr: file_get_contents of a traversal path from a fuzz value -> alert",
              detect::check_patr(with_hook(hook("file_get_contents", {"../../etc/passwd"})), c, param_based()), 1,
              VulnClass::patr);
    auto exists = with_hook(hook("file_exists", {"uploads/fuzz"}));
    auto f = mock_candidate("mf", "fuzz");
    mx.expect("patr: file_exists on a clean fuzz path, param_based -> none", detect::check_patr(exists, f, param_based()), 0);
    mx.expect("patr: file_exists on a clean fuzz path, default -> heuristic", detect::check_patr(exists, f, default_mode()),
              1, VulnClass::patr, Confidence::heuristic);
    mx.expect("patr: fopen failure without fuzz flow, param_based -> none",
              detect::check_patr(with_hook(hook("fopen", {"/var/log/app.log"},
                                                "fopen(/var/log/app.log): failed to open stream: Permission denied")),
                                 f, param_based()),
              0);
  }

  // ides
  {
    std::string payload = "O:4:\"Fuzz\":1:{s:1:\"a\";";
    auto r = mock::php_unserialize(payload);
    mx.expect_true("ides: mock unserialize rejects truncated object", r.error.has_value(), "no error");
    mx.expect("ides: malformed O:4:... from a fuzz value -> alert",
              detect::check_ides(with_hook(hook("unserialize", {payload}, r.error, r.returned_false)),
                                 mock_candidate("mu", payload), param_based()),
              1, VulnClass::ides);
    auto ok = mock::php_unserialize("b:1;");
    mx.expect("ides: valid b:1; -> none",
              detect::check_ides(with_hook(hook("unserialize", {"b:1;"}, ok.error, ok.returned_false)),
                                 mock_candidate("mu", "b:1;"), default_mode()),
              0);
    mx.expect("ides: constant string, no flow, param_based -> none",
              detect::check_ides(with_hook(hook("unserialize", {"a:1:{"}, "unserialize(): Error at offset 0 of 5 bytes")),
                                 mock_candidate("mu", "zzzz"), param_based()),
              0);
  }

  // xxe
  {
    std::string xxe = "<!DOCTYPE a [<!ENTITY e SYSTEM \"file:///etc/passwd\">]><a>&e;</a>";
    auto r = mock::load_xml(xxe);
    mx.expect("xxe: external entity with NOENT -> alert",
              detect::check_xxe(with_hook(hook("DOMDocument::loadXML", {xxe, "flags=NOENT"}, r.error, r.returned_false)),
                                mock_candidate("me", xxe), param_based()),
              1, VulnClass::xxe);
    auto plain = mock::load_xml("<a/>");
    mx.expect("xxe: plain <a/> with NOENT -> none",
              detect::check_xxe(with_hook(hook("DOMDocument::loadXML", {"<a/>", "flags=NOENT"}, plain.error)),
                                mock_candidate("me", "<a/>"), default_mode()),
              0);
    mx.expect("xxe: entity error without NOENT -> none",
              detect::check_xxe(with_hook(hook("DOMDocument::loadXML", {"<a>&e;</a>"},
                                               "DOMDocument::loadXML(): Entity 'e' not defined in Entity, line: 1")),
                                mock_candidate("me", "<a>&e;</a>"), default_mode()),
              0);
  }

  // xss
  {
    auto xss = [](const std::string& body, const std::string& content_type) {
      auto c = mock_candidate("mx", "<script>fzdeadbeef()</script>");
      c.markers.push_back({"fzdeadbeef", MarkerClass::xss, q("d")});
      c.response = ResponseSummary{200, {{"Content-Type", content_type}}, body, false};
      return c;
    };
    mx.expect("xss: token in a script body -> alert",
              detect::check_xss(xss("<p><script>fzdeadbeef()</script></p>", "text/html")), 1, VulnClass::xss);
    mx.expect("xss: escaped output -> none",
              detect::check_xss(xss("&lt;script&gt;fzdeadbeef()&lt;/script&gt;", "text/html")), 0);
    auto json = xss("{\"a\":\"<script>fzdeadbeef()</script>\"}", "application/json");
    mx.expect("xss: application/json response -> alert by default", detect::check_xss(json), 1, VulnClass::xss);
    VulnCheckPolicy strict;
    strict.xss_respect_content_type = true;
    mx.expect("xss: application/json response with xss_respect_content_type -> none", detect::check_xss(json, strict), 0);
  }

  // opre
  {
    auto redirect = [](int status, const std::string& location, const std::string& d) {
      auto c = mock_candidate("mo", d);
      c.response = ResponseSummary{status, {{"Location", location}}, "", false};
      return c;
    };
    mx.expect("opre: 302 to the fuzz URL -> alert",
              detect::check_opre(redirect(302, "http://fz.example/", "http://fz.example/")), 1, VulnClass::opre);
    mx.expect("opre: fuzz value only in the Location query -> none",
              detect::check_opre(redirect(302, "/home?from=fuzz", "fuzz")), 0);
    mx.expect("opre: status 200 with Location -> none",
              detect::check_opre(redirect(200, "http://fz.example/", "http://fz.example/")), 0);
  }

  return std::move(mx).rows();
}

FilterPropertyResult filter_property(std::size_t records, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](const auto& items) -> const auto& { return items[rng() % std::size(items)]; };

  static const std::string values[] = {"1'", "fuzz", "../etc/passwd", "O:4:\"x", "<a>&e;</a>", "ls", "a", "zz zz"};
  static const std::string functions[] = {"mysqli_query", "PDO::exec", "system", "exec", "file_get_contents",
                                          "file_exists", "fopen", "unserialize", "DOMDocument::loadXML", "strlen"};
  static const std::string errors[] = {"You have an error in your SQL syntax", "sh: 1: x: not found",
                                       "Syntax error: Unterminated quoted string", "failed to open stream",
                                       "Entity 'e' not defined", "unserialize(): Error at offset 0 of 3 bytes", "boom"};
  static const std::string fillers[] = {"SELECT 1", "echo ", "/var/www/", "", " WHERE id = "};

  FilterPropertyResult result;
  VulnCheckPolicy strict;
  VulnCheckPolicy loose;
  loose.mode = CheckMode::default_mode;

  for (std::size_t i = 0; i < records; ++i) {
    auto c = mock_candidate("m" + std::string(1, "srufexo"[rng() % 7]), pick(values));
    FeedbackRecord fb;
    int events = static_cast<int>(rng() % 4);
    for (int e = 0; e < events; ++e) {
      HookEvent ev;
      ev.function = pick(functions);
      int nargs = 1 + static_cast<int>(rng() % 2);
      for (int a = 0; a < nargs; ++a) {
        std::string arg = pick(fillers);
        if (rng() % 2) arg += c.values.at(q("d"));
        if (rng() % 3 == 0) arg += pick(values);
        ev.args.push_back(arg);
      }
      if (rng() % 3 == 0) ev.args.push_back(std::string(hooks::kNoentFlagArg));
      if (rng() % 2) ev.error = pick(errors);
      if (rng() % 5 == 0) ev.exception = HookException{"Exception", pick(errors)};
      ev.returned_false = rng() % 2;
      fb.hook_events.push_back(std::move(ev));
    }
    auto a = detect::run_checks(c, fb, strict);
    auto b = detect::run_checks(c, fb, loose);
    result.param_based_alerts += a.size();
    result.default_alerts += b.size();
    for (const auto& alert : a) {
      if (std::find(b.begin(), b.end(), alert) == b.end()) ++result.violations;
    }
    ++result.records;
  }
  return result;
}

}  // namespace webphuzz::testing
