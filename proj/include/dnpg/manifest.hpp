#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace dnpg {

struct RunManifest {
    std::string tool_version;
    std::string subcommand;
    std::string config_hash; ///< hex FNV-1a of config.dump()
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string started;  ///< UTC, ISO-8601
    std::string finished;
    std::vector<std::string> outputs;
};

std::string config_hash(const nlohmann::json& canonical_config);
std::string utc_timestamp();

/// Appends one JSON line to <run_dir>/manifest.jsonl. Earlier lines are never rewritten.
void append_manifest(const std::filesystem::path& run_dir, const RunManifest& manifest);

/// Reads every entry, recomputing each config hash; a mismatch raises IoError.
std::vector<RunManifest> load_manifests(const std::filesystem::path& run_dir);

} // namespace dnpg
