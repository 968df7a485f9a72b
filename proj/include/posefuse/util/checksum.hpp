#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace posefuse {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);
std::uint32_t crc32(std::string_view text);
/// Throws IoError if the file cannot be read.
std::uint32_t crc32_file(const std::filesystem::path& path);
/// Eight lowercase hex digits.
std::string crc32_hex(std::uint32_t value);

}  // namespace posefuse
