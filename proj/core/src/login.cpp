#include "webphuzz/login.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "webphuzz/error.hpp"

extern char** environ;

namespace webphuzz::login {

namespace {

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Cookies parse_cookie_lines(std::string_view output) {
  Cookies out;
  std::size_t start = 0;
  while (start <= output.size()) {
    auto end = output.find('\n', start);
    if (end == std::string_view::npos) end = output.size();
    auto line = trim(output.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) continue;
    std::string name(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    bool replaced = false;
    for (auto& [n, v] : out) {
      if (n == name) {
        v = value;
        replaced = true;
      }
    }
    if (!replaced) out.emplace_back(std::move(name), std::move(value));
  }
  return out;
}

std::filesystem::path resolve_profile(std::string_view profile, const std::filesystem::path& login_dir) {
  if (profile.find('/') != std::string_view::npos) return std::filesystem::path(profile);
  return login_dir / std::string(profile);
}

Cookies run_login(std::string_view profile, const std::filesystem::path& login_dir,
                  const std::map<std::string, std::string>& env) {
  auto program = resolve_profile(profile, login_dir);

  std::vector<std::string> env_strings;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    auto eq = entry.find('=');
    if (eq != std::string_view::npos && env.count(std::string(entry.substr(0, eq)))) continue;
    env_strings.emplace_back(entry);
  }
  for (const auto& [k, v] : env) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);

  int pipefd[2];
  if (::pipe(pipefd) != 0) throw LoginFailed(std::string("pipe: ") + std::strerror(errno));

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, pipefd[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, pipefd[0]);
  posix_spawn_file_actions_addclose(&actions, pipefd[1]);

  std::string path = program.string();
  char* argv[] = {path.data(), nullptr};
  pid_t pid = 0;
  int rc = ::posix_spawn(&pid, path.c_str(), &actions, nullptr, argv, envp.data());
  posix_spawn_file_actions_destroy(&actions);
  ::close(pipefd[1]);
  if (rc != 0) {
    ::close(pipefd[0]);
    throw LoginFailed("cannot run " + path + ": " + std::strerror(rc));
  }

  std::string output;
  char buf[4096];
  for (;;) {
    auto n = ::read(pipefd[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  ::close(pipefd[0]);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw LoginFailed(path + " exited with status " + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

  auto cookies = parse_cookie_lines(output);
  if (cookies.empty()) throw LoginFailed(path + " printed no cookies");
  return cookies;
}

}  // namespace webphuzz::login
