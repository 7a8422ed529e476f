#include "webphuzz/hooks.hpp"

#include <cctype>

namespace webphuzz::hooks {

namespace {

constexpr std::string_view kSqli[] = {"mysqli_query", "mysqli::query", "PDO::query", "PDO::exec"};
constexpr std::string_view kXxe[] = {"DOMDocument::load", "DOMDocument::loadXML"};
constexpr std::string_view kRce[] = {"shell_exec", "system", "passthru", "exec"};
constexpr std::string_view kIdes[] = {"unserialize"};
constexpr std::string_view kPatr[] = {
    "chgrp",          "chmod",          "chown",          "clearstatcache",
    "copy",           "disk_free_space", "disk_total_space", "file_exists",
    "file_get_contents", "file_put_contents", "file",      "fileatime",
    "filectime",      "filegroup",      "fileinode",      "filemtime",
    "fileowner",      "fileperms",      "filesize",       "filetype",
    "fnmatch",        "fopen",          "is_dir",         "is_executable",
    "is_file",        "is_link",        "is_readable",    "is_uploaded_file",
    "is_writable",    "lchgrp",         "lchown",         "link",
    "linkinfo",       "lstat",          "mkdir",          "move_uploaded_file",
    "parse_ini_file", "parse_ini_string", "readfile",     "readlink",
    "realpath",       "rename",         "rmdir",          "stat",
    "symlink",        "tempnam",        "touch",          "unlink",
};
// Hooked to force permissive results, not for detection.
constexpr std::string_view kWordpress[] = {
    "check_admin_referer", "is_admin",       "check_ajax_referer", "current_user_can",
    "get_current_user_id", "get_user_meta",  "is_super_admin",     "is_user_logged_in",
    "user_can",            "wp_get_current_user", "wp_verify_nonce",
};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(HookGroup g) {
  switch (g) {
    case HookGroup::sqli: return "sqli";
    case HookGroup::xxe: return "xxe";
    case HookGroup::rce: return "rce";
    case HookGroup::ides: return "ides";
    case HookGroup::patr: return "patr";
    case HookGroup::wordpress: return "wordpress";
  }
  return "?";
}

std::span<const std::string_view> functions(HookGroup g) {
  switch (g) {
    case HookGroup::sqli: return kSqli;
    case HookGroup::xxe: return kXxe;
    case HookGroup::rce: return kRce;
    case HookGroup::ides: return kIdes;
    case HookGroup::patr: return kPatr;
    case HookGroup::wordpress: return kWordpress;
  }
  return {};
}

bool in_group(std::string_view function, HookGroup g) {
  for (auto name : functions(g)) {
    if (iequals(name, function)) return true;
  }
  return false;
}

std::optional<HookGroup> group_of(std::string_view function) {
  for (auto g : kAllHookGroups) {
    if (in_group(function, g)) return g;
  }
  return std::nullopt;
}

}  // namespace webphuzz::hooks
