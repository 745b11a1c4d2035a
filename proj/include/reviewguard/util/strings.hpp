#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace reviewguard {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split_whitespace(std::string_view s);

// "6634" -> "6,634".
std::string with_thousands(std::int64_t value);

// Hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

// ISO-8601 UTC ("2024-01-31T12:00:00Z") from milliseconds since the epoch.
std::string iso8601_from_millis(std::int64_t millis);

}  // namespace reviewguard
