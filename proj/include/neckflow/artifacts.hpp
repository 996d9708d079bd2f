#pragma once

#include "neckflow/config.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace neckflow {

/// Library version written into manifests.
inline constexpr const char* kVersion = "1.0.0";

/// Fresh append-only directory root/stage/vNNN.
std::filesystem::path new_stage_dir(const std::filesystem::path& root, const std::string& stage);
/// Highest existing version of a stage, if any.
std::optional<std::filesystem::path> latest_stage_dir(const std::filesystem::path& root, const std::string& stage);
/// Latest stage directory or a usage error naming the command that produces it.
std::filesystem::path require_stage(const std::filesystem::path& root, const std::string& stage,
                                    const std::string& producer);

/// manifest.json with config, versions, extra JSON text and the only timestamp of the run.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::string& extra_json = "{}");

void write_text(const std::filesystem::path& file, const std::string& text);
std::string read_text(const std::filesystem::path& file);

} // namespace neckflow
