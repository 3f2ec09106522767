#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "occupilot/preprocess.hpp"
#include "occupilot/synthgen.hpp"

namespace occupilot::cli {

inline constexpr std::string_view kToolName = "occupilot";
inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;

/// Runs one subcommand. `args` excludes the program name. Errors go to `err`
/// and map to exit codes: 2 for bad configuration, 1 for I/O and data errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// pv_<id>.csv with columns bin_start, kw.
std::string pv_filename(int household_id);
void write_pv_csv(const std::filesystem::path& path, const synthgen::PvSeries& pv, telemetry::TimestampFormat fmt);
synthgen::PvSeries read_pv_csv(const std::filesystem::path& path, telemetry::TimestampFormat fmt);

/// household_id, room, bin_start, label
void write_predictions(const std::filesystem::path& path, std::span<const preprocess::RowMeta> meta,
                       std::span<const int> labels);
/// Labels aligned to `meta`; throws TimelineMismatch when a row is missing.
std::vector<int> read_predictions(const std::filesystem::path& path, std::span<const preprocess::RowMeta> meta);

/// Labeled bins with per-appliance power, the input of the power simulation.
void write_labeled_bins(const std::filesystem::path& path, std::span<const preprocess::LabeledRoom> rooms);
std::vector<preprocess::LabeledRoom> read_labeled_bins(const std::filesystem::path& path);

/// Manifest document with the resolved config and a hash of every artifact.
nlohmann::json make_manifest(std::string_view command, const nlohmann::json& config,
                             const std::filesystem::path& dir, std::span<const std::string> artifacts);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace occupilot::cli
