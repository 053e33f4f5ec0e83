#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace enrichkit {

inline constexpr std::string_view kCommandNames[] = {"index", "enrich", "adhoc", "faithfulness",
                                                     "rag", "attribution", "significance"};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitBackend = 2;

struct CommandResult {
    int exit_code = kExitOk;
    std::optional<nlohmann::json> error;  // {"error": code, "detail": text}
    std::vector<std::string> artifacts;   // relative to the output directory
};

/// Runs one subcommand against a JSON run config. Never throws: failures come
/// back as exit codes plus an error object.
CommandResult run_command(std::string_view name, const nlohmann::json& config);

nlohmann::json load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// sha256 of the canonical config with transport-only keys ("gateway", "out_dir")
/// removed, so record and replay runs of one experiment share a hash.
std::string config_hash(const nlohmann::json& config);

std::string_view library_version();

}  // namespace enrichkit
