#pragma once

// Inventory of hooked PHP functions, grouped by what they are hooked for.

#include <optional>
#include <span>
#include <string_view>

namespace webphuzz::hooks {

enum class HookGroup { sqli, xxe, rce, ides, patr, wordpress };

inline constexpr HookGroup kAllHookGroups[] = {HookGroup::sqli, HookGroup::xxe,  HookGroup::rce,
                                               HookGroup::ides, HookGroup::patr, HookGroup::wordpress};

std::string_view to_string(HookGroup g);

std::span<const std::string_view> functions(HookGroup g);

// Group of a hooked function; PHP function names compare case-insensitively.
std::optional<HookGroup> group_of(std::string_view function);

bool in_group(std::string_view function, HookGroup g);

// Pseudo-argument the shim appends to XML parser hooks when LIBXML_NOENT is set.
inline constexpr std::string_view kNoentFlagArg = "flags=NOENT";

}  // namespace webphuzz::hooks
