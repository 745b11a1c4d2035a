#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace reviewguard::jsonl {

using nlohmann::json;

// Calls `visit(record, line_number)` for every non-blank line. Header lines
// (objects whose only key is "header") are skipped. Throws ParseError naming
// the file and the 1-based line on malformed input.
void read(const std::filesystem::path& path,
          const std::function<void(const json&, std::size_t)>& visit);

std::vector<json> read_all(const std::filesystem::path& path);

// Writes all records to a temporary sibling then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::vector<json>& records);

void append(const std::filesystem::path& path, const json& record);

// Compact, key-sorted, UTF-8 serialization used for every persisted line.
std::string dump_line(const json& record);

bool is_header(const json& record);
json make_header(const std::string& format);

// Writes `content` to a temporary sibling then renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace reviewguard::jsonl
