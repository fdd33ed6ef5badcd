#include "dnpg/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "dnpg/errors.hpp"
#include "dnpg/io.hpp"

namespace dnpg {

using nlohmann::json;

std::string config_hash(const json& canonical_config) { return hex64(fnv1a64(canonical_config.dump())); }

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void append_manifest(const std::filesystem::path& run_dir, const RunManifest& m) {
    std::error_code ec;
    std::filesystem::create_directories(run_dir, ec);
    const json line = {{"tool_version", m.tool_version}, {"subcommand", m.subcommand}, {"config_hash", m.config_hash},
                       {"config", m.config},             {"seed", m.seed},             {"started", m.started},
                       {"finished", m.finished},         {"outputs", m.outputs}};
    std::ofstream out(run_dir / "manifest.jsonl", std::ios::app);
    if (!out) throw IoError("cannot append to " + (run_dir / "manifest.jsonl").string());
    out << line.dump() << '\n';
    if (!out) throw IoError("write failed: " + (run_dir / "manifest.jsonl").string());
}

std::vector<RunManifest> load_manifests(const std::filesystem::path& run_dir) {
    const std::string text = read_file(run_dir / "manifest.jsonl");
    std::vector<RunManifest> out;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            RunManifest m;
            m.tool_version = j.at("tool_version").get<std::string>();
            m.subcommand = j.at("subcommand").get<std::string>();
            m.config_hash = j.at("config_hash").get<std::string>();
            m.config = j.at("config");
            m.seed = j.at("seed").get<std::uint64_t>();
            m.started = j.at("started").get<std::string>();
            m.finished = j.at("finished").get<std::string>();
            m.outputs = j.at("outputs").get<std::vector<std::string>>();
            if (config_hash(m.config) != m.config_hash)
                throw IoError("manifest line " + std::to_string(line_no) + ": config hash mismatch");
            out.push_back(std::move(m));
        } catch (const json::exception& e) {
            throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace dnpg
