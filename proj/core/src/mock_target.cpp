#include "webphuzz/mock_target.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <map>
#include <set>
#include <thread>

#include "httplib.h"
#include "webphuzz/error.hpp"
#include "webphuzz/feedback.hpp"
#include "webphuzz/url.hpp"

namespace webphuzz::mock {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string near_text(std::string_view rest) {
  constexpr std::size_t kNear = 80;
  return std::string(rest.substr(0, kNear));
}

// ---------------------------------------------------------------- MySQL

std::string syntax_error_near(std::string_view rest) {
  return "You have an error in your SQL syntax; check the manual that corresponds to your MySQL server "
         "version for the right syntax to use near '" +
         near_text(rest) + "' at line 1";
}

// ---------------------------------------------------------------- dash

const std::set<std::string>& shell_builtins() {
  static const std::set<std::string> names = {
      "echo", "printf", "true",  "false", "cat",  "ls",  "id",   "whoami", "pwd", "test", "[",   "sleep",
      "uname", "date",  "env",   ":",     "exit", "cd",  "set",  "export", "read", "head", "tail", "grep",
      "sh",    "bash",  "ping",  "nc",    "wget", "curl", "touch", "rm",   "mkdir", "hostname",
  };
  return names;
}

const std::set<std::string>& executables() {
  static const std::set<std::string> paths = {"/bin/sh", "/bin/ls", "/bin/cat", "/usr/bin/id", "/bin/echo",
                                              "/usr/bin/whoami", "/bin/bash"};
  return paths;
}

struct ShellScan {
  std::optional<std::string> syntax;  // first syntax error
  std::vector<std::string> commands;  // command words in execution order
};

// Tokenises a dash command line far enough to find syntax errors and the
// command word of every simple command.
void scan_shell(std::string_view s, ShellScan& out) {
  std::size_t i = 0;
  bool expect_command = true;  // next word is a command name
  bool empty_command = true;   // nothing since the last separator
  bool pending_redirect = false;
  std::string word;
  bool in_word = false;

  auto syntax = [&](std::string msg) {
    if (!out.syntax) out.syntax = "Syntax error: " + std::move(msg);
  };
  auto end_word = [&] {
    if (!in_word) return;
    if (pending_redirect) {
      pending_redirect = false;
    } else if (expect_command) {
      bool assignment = word.find('=') != std::string::npos && word.front() != '=';
      if (!assignment) {
        out.commands.push_back(word);
        expect_command = false;
      }
    }
    empty_command = false;
    word.clear();
    in_word = false;
  };

  while (i < s.size() && !out.syntax) {
    char c = s[i];
    if (c == '\'') {
      auto close = s.find('\'', i + 1);
      if (close == std::string_view::npos) return syntax("Unterminated quoted string");
      word.append(s.substr(i + 1, close - i - 1));
      in_word = true;
      i = close + 1;
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != '"') j += s[j] == '\\' ? 2 : 1;
      if (j >= s.size()) return syntax("Unterminated quoted string");
      word.append(s.substr(i + 1, j - i - 1));
      in_word = true;
      i = j + 1;
    } else if (c == '\\') {
      if (i + 1 < s.size()) word += s[i + 1];
      in_word = true;
      i += 2;
    } else if (c == '`') {
      auto close = s.find('`', i + 1);
      if (close == std::string_view::npos) return syntax("EOF in backquote substitution");
      ShellScan inner;
      scan_shell(s.substr(i + 1, close - i - 1), inner);
      if (inner.syntax) {
        out.syntax = inner.syntax;
        return;
      }
      out.commands.insert(out.commands.end(), inner.commands.begin(), inner.commands.end());
      in_word = true;
      word += "x";
      i = close + 1;
    } else if (c == '$' && i + 1 < s.size() && s[i + 1] == '(') {
      int depth = 1;
      std::size_t j = i + 2;
      while (j < s.size() && depth > 0) {
        if (s[j] == '(') ++depth;
        if (s[j] == ')') --depth;
        ++j;
      }
      if (depth > 0) return syntax("end of file unexpected (expecting \")\")");
      ShellScan inner;
      scan_shell(s.substr(i + 2, j - i - 3), inner);
      if (inner.syntax) {
        out.syntax = inner.syntax;
        return;
      }
      out.commands.insert(out.commands.end(), inner.commands.begin(), inner.commands.end());
      in_word = true;
      word += "x";
      i = j;
    } else if (is_space(c)) {
      end_word();
      ++i;
    } else if (c == '#' && !in_word) {
      break;
    } else if (c == ';' || c == '&' || c == '|') {
      end_word();
      if (pending_redirect) return syntax("\"" + std::string(1, c) + "\" unexpected");
      std::string op(1, c);
      if (i + 1 < s.size() && (s[i + 1] == c)) op += c;
      if (empty_command) return syntax("\"" + op + "\" unexpected");
      i += op.size();
      expect_command = true;
      empty_command = true;
      if (op != ";" && op != "&") {
        // `a |`, `a &&` and `a ||` need a right-hand side.
        std::size_t j = i;
        while (j < s.size() && is_space(s[j])) ++j;
        if (j >= s.size()) return syntax("end of file unexpected");
      }
    } else if (c == '(' || c == ')') {
      return syntax("\"" + std::string(1, c) + "\" unexpected");
    } else if (c == '<' || c == '>') {
      end_word();
      if (pending_redirect) return syntax("redirection unexpected");
      pending_redirect = true;
      ++i;
      if (i < s.size() && (s[i] == '>' || s[i] == '&')) ++i;
    } else {
      word += c;
      in_word = true;
      ++i;
    }
  }
  if (out.syntax) return;
  end_word();
  if (pending_redirect) syntax("newline unexpected");
}

// ---------------------------------------------------------------- unserialize

class Unserializer {
 public:
  explicit Unserializer(std::string_view s) : s_(s) {}

  // Offset of the first invalid byte, or nullopt when a value parses.
  std::optional<std::size_t> run(bool& is_false) {
    std::size_t pos = 0;
    if (!value(pos, 0)) return error_at_;
    is_false = false_;
    return std::nullopt;
  }

 private:
  bool fail(std::size_t at) {
    error_at_ = at;
    return false;
  }

  bool expect(std::size_t& pos, char c) {
    if (pos < s_.size() && s_[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  bool digits(std::size_t& pos, bool allow_sign, long long* out = nullptr) {
    std::size_t start = pos;
    if (allow_sign && pos < s_.size() && (s_[pos] == '-' || s_[pos] == '+')) ++pos;
    std::size_t first = pos;
    while (pos < s_.size() && is_digit(s_[pos])) ++pos;
    if (pos == first) {
      pos = start;
      return false;
    }
    if (out) {
      auto text = s_.substr(first, pos - first);
      *out = text.size() > 12 ? -1 : std::stoll(std::string(text));
    }
    return true;
  }

  bool value(std::size_t& pos, int depth) {
    const std::size_t start = pos;
    if (pos >= s_.size() || depth > 64) return fail(start);
    char type = s_[pos++];
    switch (type) {
      case 'N':
        return expect(pos, ';') || fail(start);
      case 'b': {
        if (!expect(pos, ':') || pos >= s_.size() || (s_[pos] != '0' && s_[pos] != '1')) return fail(start);
        if (depth == 0) false_ = s_[pos] == '0';
        ++pos;
        return expect(pos, ';') || fail(start);
      }
      case 'i':
        if (!expect(pos, ':') || !digits(pos, true) || !expect(pos, ';')) return fail(start);
        return true;
      case 'd': {
        if (!expect(pos, ':')) return fail(start);
        auto rest = s_.substr(pos);
        for (auto special : {"INF", "-INF", "NAN"}) {
          std::string_view sv(special);
          if (rest.substr(0, sv.size()) == sv) {
            pos += sv.size();
            return expect(pos, ';') || fail(start);
          }
        }
        std::size_t first = pos;
        if (pos < s_.size() && (s_[pos] == '-' || s_[pos] == '+')) ++pos;
        bool any = false;
        while (pos < s_.size() && (is_digit(s_[pos]) || s_[pos] == '.')) {
          any = any || is_digit(s_[pos]);
          ++pos;
        }
        if (any && pos < s_.size() && (s_[pos] == 'e' || s_[pos] == 'E')) {
          ++pos;
          if (!digits(pos, true)) return fail(start);
        }
        if (!any || pos == first) return fail(start);
        return expect(pos, ';') || fail(start);
      }
      case 's': {
        long long len = 0;
        if (!expect(pos, ':') || !digits(pos, false, &len) || !expect(pos, ':') || !expect(pos, '"'))
          return fail(start);
        if (len < 0 || pos + static_cast<std::size_t>(len) > s_.size()) return fail(start);
        pos += static_cast<std::size_t>(len);
        if (!expect(pos, '"') || !expect(pos, ';')) return fail(start);
        return true;
      }
      case 'a': {
        long long n = 0;
        if (!expect(pos, ':') || !digits(pos, false, &n) || !expect(pos, ':') || !expect(pos, '{')) return fail(start);
        return members(pos, n, depth) || true_if_failed_at(start);
      }
      case 'O': {
        long long len = 0, n = 0;
        if (!expect(pos, ':') || !digits(pos, false, &len) || !expect(pos, ':') || !expect(pos, '"'))
          return fail(start);
        if (len <= 0 || pos + static_cast<std::size_t>(len) > s_.size()) return fail(start);
        for (std::size_t k = 0; k < static_cast<std::size_t>(len); ++k) {
          char c = s_[pos + k];
          if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\\')) return fail(start);
        }
        pos += static_cast<std::size_t>(len);
        if (!expect(pos, '"') || !expect(pos, ':') || !digits(pos, false, &n) || !expect(pos, ':') ||
            !expect(pos, '{'))
          return fail(start);
        return members(pos, n, depth) || true_if_failed_at(start);
      }
      default:
        return fail(start);
    }
  }

  // Nested failures report the offset of the outermost value, as PHP does.
  bool true_if_failed_at(std::size_t start) { return fail(start); }

  bool members(std::size_t& pos, long long n, int depth) {
    if (n < 0) return false;
    for (long long k = 0; k < n; ++k) {
      if (pos >= s_.size() || (s_[pos] != 'i' && s_[pos] != 's')) return false;
      if (!value(pos, depth + 1)) return false;
      if (!value(pos, depth + 1)) return false;
    }
    return expect(pos, '}');
  }

  std::string_view s_;
  std::size_t error_at_ = 0;
  bool false_ = false;
};

// ---------------------------------------------------------------- libxml

class XmlChecker {
 public:
  explicit XmlChecker(std::string_view s) : s_(s) {}

  // libxml-style message of the first problem, if any.
  std::optional<std::string> run() {
    skip_misc();
    if (starts("<?xml")) {
      auto end = s_.find("?>", pos_);
      if (end == std::string_view::npos) return msg("ParsePI: PI xml never end ...");
      pos_ = end + 2;
    }
    skip_misc();
    if (starts("<!DOCTYPE")) {
      if (auto e = doctype()) return e;
    }
    skip_misc();
    if (pos_ >= s_.size() || s_[pos_] != '<') return msg("Start tag expected, '<' not found");
    if (auto e = element()) return e;
    skip_misc();
    if (pos_ < s_.size()) return msg("Extra content at the end of the document");
    return std::nullopt;
  }

  std::optional<std::string> external_entity() const { return system_uri_; }

 private:
  static std::string msg(const std::string& text) { return text; }

  bool starts(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  static bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':'; }
  static bool name_char(char c) {
    return name_start(c) || is_digit(c) || c == '-' || c == '.';
  }

  std::string name() {
    std::size_t start = pos_;
    if (pos_ < s_.size() && name_start(s_[pos_])) {
      ++pos_;
      while (pos_ < s_.size() && name_char(s_[pos_])) ++pos_;
    }
    return std::string(s_.substr(start, pos_ - start));
  }

  void skip_ws() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts("<!--")) {
        auto end = s_.find("-->", pos_ + 4);
        pos_ = end == std::string_view::npos ? s_.size() : end + 3;
      } else if (starts("<?") && !starts("<?xml")) {
        auto end = s_.find("?>", pos_);
        pos_ = end == std::string_view::npos ? s_.size() : end + 2;
      } else {
        return;
      }
    }
  }

  std::optional<std::string> quoted(std::string& out) {
    if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) return msg("SystemLiteral \" or ' expected");
    char q = s_[pos_];
    auto end = s_.find(q, pos_ + 1);
    if (end == std::string_view::npos) return msg("Unfinished SystemLiteral");
    out = std::string(s_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return std::nullopt;
  }

  std::optional<std::string> external_id() {
    std::string literal;
    if (starts("SYSTEM")) {
      pos_ += 6;
      skip_ws();
      if (auto e = quoted(literal)) return e;
      if (!system_uri_) system_uri_ = literal;
    } else if (starts("PUBLIC")) {
      pos_ += 6;
      skip_ws();
      if (auto e = quoted(literal)) return e;
      skip_ws();
      if (auto e = quoted(literal)) return e;
      if (!system_uri_) system_uri_ = literal;
    }
    return std::nullopt;
  }

  std::optional<std::string> doctype() {
    pos_ += 9;
    skip_ws();
    if (name().empty()) return msg("xmlParseDocTypeDecl : no DOCTYPE name !");
    skip_ws();
    if (auto e = external_id()) return e;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '[') {
      ++pos_;
      for (;;) {
        skip_ws();
        if (pos_ >= s_.size()) return msg("xmlParseInternalSubset: error detected in Markup declaration");
        if (s_[pos_] == ']') {
          ++pos_;
          break;
        }
        if (starts("<!ENTITY")) {
          pos_ += 8;
          skip_ws();
          if (pos_ < s_.size() && s_[pos_] == '%') {
            ++pos_;
            skip_ws();
          }
          auto ent = name();
          if (ent.empty()) return msg("xmlParseEntityDecl: no name");
          skip_ws();
          if (starts("SYSTEM") || starts("PUBLIC")) {
            if (auto e = external_id()) return e;
          } else {
            std::string value;
            if (auto e = quoted(value)) return msg("EntityValue: \" or ' expected");
          }
          skip_ws();
          if (pos_ >= s_.size() || s_[pos_] != '>') return msg("EntityDecl: entity " + ent + " not terminated");
          ++pos_;
          entities_.insert(ent);
        } else if (starts("<!--")) {
          skip_misc();
        } else if (starts("<!")) {
          auto end = s_.find('>', pos_);
          if (end == std::string_view::npos) return msg("xmlParseInternalSubset: error detected in Markup declaration");
          pos_ = end + 1;
        } else {
          return msg("xmlParseInternalSubset: error detected in Markup declaration");
        }
      }
      skip_ws();
    }
    if (pos_ >= s_.size() || s_[pos_] != '>') return msg("DOCTYPE improperly terminated");
    ++pos_;
    return std::nullopt;
  }

  std::optional<std::string> reference() {
    ++pos_;  // '&'
    if (pos_ < s_.size() && s_[pos_] == '#') {
      auto end = s_.find(';', pos_);
      if (end == std::string_view::npos) return msg("CharRef: invalid decimal value");
      pos_ = end + 1;
      return std::nullopt;
    }
    auto ent = name();
    if (ent.empty()) return msg("xmlParseEntityRef: no name");
    if (pos_ >= s_.size() || s_[pos_] != ';') return msg("EntityRef: expecting ';'");
    ++pos_;
    static const std::set<std::string> predefined = {"lt", "gt", "amp", "quot", "apos"};
    if (!predefined.count(ent) && !entities_.count(ent)) return msg("Entity '" + ent + "' not defined");
    return std::nullopt;
  }

  std::optional<std::string> element() {
    ++pos_;  // '<'
    auto tag = name();
    if (tag.empty()) return msg("StartTag: invalid element name");
    for (;;) {
      bool had_space = pos_ < s_.size() && is_space(s_[pos_]);
      skip_ws();
      if (pos_ >= s_.size()) return msg("Couldn't find end of Start Tag " + tag + " line 1");
      if (starts("/>")) {
        pos_ += 2;
        return std::nullopt;
      }
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (!had_space) return msg("attributes construct error");
      auto attr = name();
      if (attr.empty()) return msg("attributes construct error");
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != '=') return msg("Specification mandates value for attribute " + attr);
      ++pos_;
      skip_ws();
      if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) return msg("AttValue: \" or ' expected");
      char q = s_[pos_++];
      while (pos_ < s_.size() && s_[pos_] != q) {
        if (s_[pos_] == '<') return msg("Unescaped '<' not allowed in attributes values");
        if (s_[pos_] == '&') {
          if (auto e = reference()) return e;
          continue;
        }
        ++pos_;
      }
      if (pos_ >= s_.size()) return msg("AttValue: ' expected");
      ++pos_;
    }
    // content
    for (;;) {
      if (pos_ >= s_.size()) return msg("Premature end of data in tag " + tag + " line 1");
      char c = s_[pos_];
      if (c == '&') {
        if (auto e = reference()) return e;
      } else if (starts("</")) {
        pos_ += 2;
        auto closing = name();
        skip_ws();
        if (closing != tag) return msg("Opening and ending tag mismatch: " + tag + " line 1 and " + closing);
        if (pos_ >= s_.size() || s_[pos_] != '>') return msg("expected '>'");
        ++pos_;
        return std::nullopt;
      } else if (starts("<!--")) {
        auto end = s_.find("-->", pos_ + 4);
        if (end == std::string_view::npos) return msg("Comment not terminated");
        pos_ = end + 3;
      } else if (starts("<![CDATA[")) {
        auto end = s_.find("]]>", pos_);
        if (end == std::string_view::npos) return msg("CData section not finished");
        pos_ = end + 3;
      } else if (starts("<?")) {
        auto end = s_.find("?>", pos_);
        if (end == std::string_view::npos) return msg("ParsePI: PI never end ...");
        pos_ = end + 2;
      } else if (c == '<') {
        if (auto e = element()) return e;
      } else {
        ++pos_;
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::set<std::string> entities_;
  std::optional<std::string> system_uri_;
};

// ---------------------------------------------------------------- script

HookEvent hook(std::string function, std::vector<std::string> args) {
  HookEvent ev;
  ev.function = std::move(function);
  for (auto& a : args) {
    if (a.size() > kMaxHookArgBytes) a.resize(kMaxHookArgBytes);
  }
  ev.args = std::move(args);
  return ev;
}

struct Script {
  MockResponse r;
  std::vector<int> lines;

  void reach(int line) { lines.push_back(line); }

  void warn(const std::string& message, int line) {
    r.feedback.php_errors.push_back({message, std::string(kScriptFile), line});
  }

  // Uncaught exception: the script stops here. The status stays 200, as with
  // display_errors on and no error page configured.
  void fatal(const HookException& ex, int line) {
    r.feedback.php_exceptions.push_back({ex.class_name, ex.message, std::string(kScriptFile), line});
    r.feedback.termination = Termination::error;
    r.body = "<br />\n<b>Fatal error</b>:  Uncaught " + ex.class_name + ": " + ex.message;
  }
};

}  // namespace

std::optional<std::string> mysql_error(std::string_view query) {
  char open = 0;
  std::size_t open_at = 0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    char c = query[i];
    if (open) {
      if (c == '\\' && open != '`') {
        ++i;
      } else if (c == open) {
        if (i + 1 < query.size() && query[i + 1] == open) {
          ++i;  // doubled quote
        } else {
          open = 0;
        }
      }
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') {
      open = c;
      open_at = i;
    } else if (c == '#' || (c == '-' && query.substr(i, 3) == "-- ")) {
      break;
    } else if (c == '/' && query.substr(i, 2) == "/*") {
      auto end = query.find("*/", i + 2);
      if (end == std::string_view::npos) return syntax_error_near(query.substr(i));
      i = end + 1;
    }
  }
  if (open) return syntax_error_near(query.substr(open_at));

  // `WHERE id =` with nothing after it.
  auto eq = query.rfind('=');
  if (eq != std::string_view::npos) {
    auto tail = query.substr(eq + 1);
    if (std::all_of(tail.begin(), tail.end(), is_space)) return syntax_error_near("");
  }
  return std::nullopt;
}

std::optional<std::string> dash_error(std::string_view command) {
  ShellScan scan;
  scan_shell(command, scan);
  if (scan.syntax) return "sh: 1: " + *scan.syntax;
  for (const auto& cmd : scan.commands) {
    bool known = cmd.find('/') != std::string::npos ? executables().count(cmd) > 0 : shell_builtins().count(cmd) > 0;
    if (!known) return "sh: 1: " + cmd + ": not found";
  }
  return std::nullopt;
}

UnserializeResult php_unserialize(std::string_view data) {
  UnserializeResult r;
  if (data.empty()) {
    r.returned_false = true;
    return r;
  }
  bool is_false = false;
  if (auto at = Unserializer(data).run(is_false)) {
    r.error = "unserialize(): Error at offset " + std::to_string(*at) + " of " + std::to_string(data.size()) +
              " bytes";
    r.returned_false = true;
  } else {
    r.returned_false = is_false;
  }
  return r;
}

std::string normalize_path(std::string_view path) {
  std::string full = !path.empty() && path.front() == '/' ? std::string(path)
                                                          : std::string(kDocumentRoot) + "/" + std::string(path);
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= full.size()) {
    auto end = full.find('/', start);
    if (end == std::string::npos) end = full.size();
    auto part = full.substr(start, end - start);
    if (part == "..") {
      if (!parts.empty()) parts.pop_back();
    } else if (!part.empty() && part != ".") {
      parts.push_back(part);
    }
    start = end + 1;
  }
  std::string out;
  for (const auto& p : parts) out += "/" + p;
  return out.empty() ? "/" : out;
}

CallResult file_get_contents(std::string_view path) {
  static const std::set<std::string> files = {"/etc/passwd", std::string(kDocumentRoot) + "/data.txt"};
  static const std::set<std::string> dirs = {"/", "/etc", "/var", "/var/www", std::string(kDocumentRoot)};
  const std::string shown(path);

  CallResult r;
  if (path.empty()) {
    r.exception = HookException{"ValueError", "Path cannot be empty"};
    return r;
  }
  if (path.find('\0') != std::string_view::npos) {
    r.exception = HookException{"ValueError", "file_get_contents(): Argument #1 ($filename) must not contain any null bytes"};
    return r;
  }
  auto scheme_end = path.find("://");
  std::string_view local = path;
  if (scheme_end != std::string_view::npos) {
    auto scheme = path.substr(0, scheme_end);
    if (scheme == "http" || scheme == "https" || scheme == "ftp") {
      auto host = path.substr(scheme_end + 3);
      host = host.substr(0, host.find_first_of("/:?#"));
      r.error = "file_get_contents(" + shown + "): Failed to open stream: php_network_getaddresses: getaddrinfo for " +
                std::string(host) + " failed: Name or service not known";
      r.returned_false = true;
      return r;
    }
    if (scheme == "file") {
      local = path.substr(scheme_end + 3);
    } else {
      r.error = "file_get_contents(): Unable to find the wrapper \"" + std::string(scheme) +
                "\" - did you forget to enable it when you configured PHP?";
    }
  }
  auto resolved = normalize_path(local);
  if (files.count(resolved)) return r;
  if (dirs.count(resolved)) {
    r.error = "file_get_contents(): read of 8192 bytes failed with errno=21 Is a directory";
    return r;
  }
  r.error = "file_get_contents(" + shown + "): Failed to open stream: No such file or directory";
  r.returned_false = true;
  return r;
}

CallResult load_xml(std::string_view xml) {
  CallResult r;
  if (xml.empty()) {
    r.exception = HookException{"ValueError", "DOMDocument::loadXML(): Argument #1 ($source) must not be empty"};
    return r;
  }
  XmlChecker checker(xml);
  auto problem = checker.run();
  if (auto uri = checker.external_entity()) {
    r.error = "DOMDocument::loadXML(): I/O warning : failed to load external entity \"" + *uri + "\" in Entity, line: 1";
  } else if (problem) {
    r.error = "DOMDocument::loadXML(): " + *problem + " in Entity, line: 1";
  }
  r.returned_false = problem.has_value();
  return r;
}

MockResponse handle(std::string_view m, std::string_view d, std::string_view feedback_id) {
  Script s;
  s.r.headers.emplace_back("Content-Type", "text/html; charset=UTF-8");
  s.r.feedback.id = std::string(feedback_id);
  const std::string dv(d);

  s.reach(1);
  s.reach(2);
  auto finish = [&]() -> MockResponse {
    std::sort(s.lines.begin(), s.lines.end());
    s.r.feedback.coverage[std::string(kScriptFile)] = s.lines;
    return std::move(s.r);
  };
  if (m.empty() || m[0] != 'm') return finish();
  char sel = m.size() > 1 ? m[1] : '\0';

  s.reach(3);
  if (sel == 's') {
    s.reach(4);
    s.reach(5);
    auto query = "SELECT * FROM t WHERE id =  " + dv;
    auto ev = hook("mysqli_query", {query});
    if (auto err = mysql_error(query)) {
      ev.error = *err;
      ev.returned_false = true;
    }
    s.r.feedback.hook_events.push_back(std::move(ev));
  }
  s.reach(7);
  if (sel == 'r') {
    s.reach(8);
    auto command = "echo " + dv;
    auto ev = hook("system", {command});
    if (auto err = dash_error(command)) {
      ev.error = *err;
    } else {
      s.r.body += dv + "\n";
    }
    s.r.feedback.hook_events.push_back(std::move(ev));
  }
  s.reach(10);
  if (sel == 'u') {
    s.reach(11);
    auto res = php_unserialize(d);
    auto ev = hook("unserialize", {dv});
    ev.error = res.error;
    ev.returned_false = res.returned_false;
    if (res.error) s.warn(*res.error, 11);
    s.r.feedback.hook_events.push_back(std::move(ev));
  }
  s.reach(13);
  if (sel == 'f') {
    s.reach(14);
    auto res = file_get_contents(d);
    auto ev = hook("file_get_contents", {dv});
    ev.error = res.error;
    ev.exception = res.exception;
    ev.returned_false = res.returned_false;
    s.r.feedback.hook_events.push_back(std::move(ev));
    if (res.exception) {
      s.fatal(*res.exception, 14);
      return finish();
    }
    if (res.error) s.warn(*res.error, 14);
  }
  s.reach(16);
  if (sel == 'e') {
    s.reach(17);
    s.reach(18);
    auto res = load_xml(d);
    auto ev = hook("DOMDocument::loadXML", {dv, "flags=NOENT"});
    ev.error = res.error;
    ev.exception = res.exception;
    ev.returned_false = res.returned_false;
    s.r.feedback.hook_events.push_back(std::move(ev));
    if (res.exception) {
      s.fatal(*res.exception, 18);
      return finish();
    }
    if (res.error) s.warn(*res.error, 18);
  }
  s.reach(20);
  if (sel == 'x') {
    s.reach(21);
    s.r.body = "<html><body>" + dv + "</body></html>";
  }
  s.reach(23);
  if (sel == 'o') {
    s.reach(24);
    s.r.status = 302;
    s.r.headers.emplace_back("Location", dv);
  }
  return finish();
}

std::vector<int> sinks_reached(const FeedbackRecord& fb) {
  std::vector<int> out;
  auto it = fb.coverage.find(std::string(kScriptFile));
  if (it == fb.coverage.end()) return out;
  for (int line : kSinkLines) {
    if (std::binary_search(it->second.begin(), it->second.end(), line)) out.push_back(line);
  }
  return out;
}

// ---------------------------------------------------------------- transports

InProcessTransport::InProcessTransport(std::filesystem::path shared_dir) : shared_dir_(std::move(shared_dir)) {}

ResponseSummary InProcessTransport::execute(const http::PreparedRequest& r, double) {
  ResponseSummary out;
  auto q = r.target.find('?');
  auto path = r.target.substr(0, q);
  if (path != kPath && path != "/vuln.php") {
    out.status = 404;
    return out;
  }
  std::string m, d;
  if (q != std::string::npos) {
    for (auto& [k, v] : parse_form(std::string_view(r.target).substr(q + 1))) {
      if (k == "m") m = v;
      if (k == "d") d = v;
    }
  }
  auto id = r.header(http::kFeedbackHeader).value_or("");
  auto resp = handle(m, d, id);
  if (!id.empty()) feedback::write_feedback_file(shared_dir_, resp.feedback);
  out.status = resp.status;
  out.headers = std::move(resp.headers);
  out.body = std::move(resp.body);
  if (out.body.size() > http::kMaxBodyBytes) {
    out.body.resize(http::kMaxBodyBytes);
    out.truncated = true;
  }
  return out;
}

struct MockServer::Impl {
  std::filesystem::path shared_dir;
  std::size_t threads;
  httplib::Server server;
  std::thread thread;
  std::atomic<std::uint64_t> served{0};
};

MockServer::MockServer(std::filesystem::path shared_dir, int port, std::size_t threads)
    : impl_(std::make_unique<Impl>()), port_(port) {
  impl_->shared_dir = std::move(shared_dir);
  impl_->threads = std::max<std::size_t>(threads, 10);
  auto* impl = impl_.get();
  impl->server.set_tcp_nodelay(true);
  // Idle keep-alive connections hold a pool thread; keep stop() quick.
  impl->server.set_keep_alive_timeout(1);
  impl->server.new_task_queue = [impl] { return new httplib::ThreadPool(impl->threads); };
  auto handler = [impl](const httplib::Request& req, httplib::Response& res) {
    auto id = req.get_header_value(std::string(http::kFeedbackHeader));
    auto resp = handle(req.get_param_value("m"), req.get_param_value("d"), id);
    if (!id.empty()) {
      try {
        feedback::write_feedback_file(impl->shared_dir, resp.feedback);
      } catch (const Error&) {
        // The shim never breaks the page; a missing file is the fuzzer's problem.
      }
    }
    res.status = resp.status;
    std::string content_type = "text/html";
    for (const auto& [k, v] : resp.headers) {
      if (k == "Content-Type")
        content_type = v;
      else
        res.set_header(k, v);
    }
    res.set_content(resp.body, content_type);
    impl->served.fetch_add(1, std::memory_order_relaxed);
  };
  impl->server.Get(std::string(kPath), handler);
  impl->server.Get("/vuln.php", handler);
}

MockServer::~MockServer() { stop(); }

void MockServer::start() {
  std::filesystem::create_directories(impl_->shared_dir);
  if (port_ == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw IoError("cannot bind mock target");
  } else if (!impl_->server.bind_to_port("127.0.0.1", port_)) {
    throw IoError("cannot bind mock target to port " + std::to_string(port_));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void MockServer::run() {
  std::filesystem::create_directories(impl_->shared_dir);
  if (port_ == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else if (!impl_->server.bind_to_port("127.0.0.1", port_)) {
    throw IoError("cannot bind mock target to port " + std::to_string(port_));
  }
  impl_->server.listen_after_bind();
}

void MockServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockServer::origin() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::uint64_t MockServer::requests_served() const { return impl_->served.load(); }

}  // namespace webphuzz::mock
