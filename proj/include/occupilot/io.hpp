#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace occupilot::io {

inline constexpr int kSchemaVersion = 1;

/// Writes via a sibling temp file and rename, so readers never see a partial file.
void write_atomic(const std::filesystem::path& path, std::string_view content);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

std::string read_text(const std::filesystem::path& path);
/// Throws Error naming the path when missing or unparsable.
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace occupilot::io
