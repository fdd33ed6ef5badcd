#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace dnpg {

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Shortest-safe round-trip form: 17 significant digits ("%.17g").
std::string format_real(double value);

std::string read_file(const std::filesystem::path& path);
/// Writes `path.tmp` then renames over `path`. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Sample CSV: header "run_id,seed,x0[,x1...]", one row per sample.
struct SampleTable {
    std::vector<std::string> run_ids;
    std::vector<std::uint64_t> seeds;
    std::vector<Eigen::VectorXd> samples;
};

std::string format_samples_csv(const SampleTable& table);
SampleTable parse_samples_csv(std::string_view text);

} // namespace dnpg
