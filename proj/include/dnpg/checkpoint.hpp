#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dnpg/denoiser.hpp"

namespace dnpg {

/// Binary checkpoint layout, all integers and floats little-endian:
///
///   "DNPG"                      magic
///   u32 version                 kCheckpointVersion
///   u32 dim
///   u32 conditions, time_steps, time_frequencies, embedding_width, activation
///   u32 hidden_count, then hidden_count x u32 widths
///   u32 array_count             1 + 2 x layers (embedding, then W, b per layer)
///   per array: u32 rows, u32 cols, rows*cols x f32 (row-major)
///   u64 FNV-1a checksum of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const DenoiserParams& params);
/// Throws IoError on bad magic, unsupported version, truncation, checksum
/// mismatch or a shape table that disagrees with the architecture.
DenoiserParams decode_checkpoint(const std::string& bytes);

void save_checkpoint(const DenoiserParams& params, const std::filesystem::path& path);
DenoiserParams load_checkpoint(const std::filesystem::path& path);

} // namespace dnpg
