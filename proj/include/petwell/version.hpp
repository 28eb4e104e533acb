#pragma once

#include <array>
#include <string_view>
#include <utility>

namespace petwell {

inline constexpr std::string_view kVersion = "1.0.0";

/// Bumped whenever a module's observable output changes.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 9> kModuleVersions{{
    {"corpus", "1.0"},
    {"petclass", "1.0"},
    {"faceclient", "1.0"},
    {"inference", "1.0"},
    {"sentiment", "1.0"},
    {"happiness", "1.0"},
    {"stats", "1.0"},
    {"synth", "1.0"},
    {"cli", "1.0"},
}};

inline constexpr const auto& module_versions() { return kModuleVersions; }

}  // namespace petwell
