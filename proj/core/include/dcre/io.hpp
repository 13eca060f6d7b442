#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace dcre {

/// Shortest round-trip decimal form of a double (locale independent).
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// 64-bit FNV-1a over the file's bytes, rendered as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace dcre
