#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace instructforge::util {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

// Digest of several fields, each length-prefixed so ("ab","c") and ("a","bc")
// hash differently.
std::string sha256_fields(std::initializer_list<std::string_view> fields);

// First eight digest bytes as a little-endian integer. Used for seeding.
std::uint64_t hash64(std::string_view data);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace instructforge::util
