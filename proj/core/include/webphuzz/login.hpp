#pragma once

// Login profiles: external programs that sign in to the target and print the
// resulting session cookies as `name=value` lines on stdout.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace webphuzz::login {

using Cookies = std::vector<std::pair<std::string, std::string>>;

// `name=value` lines; blank lines and lines starting with '#' are ignored,
// surrounding whitespace is trimmed. Later duplicates win.
Cookies parse_cookie_lines(std::string_view output);

// A profile name resolves to `<login_dir>/<name>`; names containing '/' are
// used as paths.
std::filesystem::path resolve_profile(std::string_view profile, const std::filesystem::path& login_dir);

// Runs the profile with the current environment plus `env`. Throws LoginFailed
// on spawn failure, nonzero exit, or when no cookie was printed.
Cookies run_login(std::string_view profile, const std::filesystem::path& login_dir,
                  const std::map<std::string, std::string>& env = {});

}  // namespace webphuzz::login
