#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "posefuse/nn/model.hpp"

namespace posefuse::nn {

/// Model container, all integers little-endian:
///
///   "PFM1"                      magic
///   u32 format version          (kModelFormatVersion)
///   u32 metadata count, then per entry: u32 len, key bytes, u32 len, value bytes
///   u32 tensor count, then per entry (the layer manifest):
///       u32 len, name bytes, u8 dtype (1 = float64), u32 rank, u64 dims[rank]
///   float64 blobs, one per manifest entry, in manifest order
///   u32 CRC-32 of every preceding byte
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const PoseNetModel& model);
/// Throws CorruptModelFile on bad magic, version, truncation, checksum
/// mismatch or a manifest that does not fit the described architecture.
PoseNetModel deserialize_model(std::span<const std::uint8_t> bytes);

/// Throws IoError when the file cannot be written.
void save_model(const PoseNetModel& model, const std::filesystem::path& path);
PoseNetModel load_model(const std::filesystem::path& path);

}  // namespace posefuse::nn
