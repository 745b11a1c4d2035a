#include "reviewguard/util/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "reviewguard/error.hpp"
#include "reviewguard/taxonomy.hpp"

namespace reviewguard::jsonl {

namespace fs = std::filesystem;

void read(const fs::path& path, const std::function<void(const json&, std::size_t)>& visit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string(), line_no, std::string("corrupt record: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(path.string(), line_no, "record is not a JSON object");
    if (is_header(record)) continue;
    try {
      visit(record, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

std::vector<json> read_all(const fs::path& path) {
  std::vector<json> out;
  read(path, [&](const json& j, std::size_t) { out.push_back(j); });
  return out;
}

std::string dump_line(const json& record) {
  return record.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_atomic(const fs::path& path, const std::vector<json>& records) {
  std::string content;
  for (const auto& r : records) {
    content += dump_line(r);
    content += '\n';
  }
  write_text_atomic(path, content);
}

void append(const fs::path& path, const json& record) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  out << dump_line(record) << '\n';
  out.flush();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_header(const json& record) {
  return record.is_object() && record.size() == 1 && record.contains("header");
}

json make_header(const std::string& format) {
  json names = json::array();
  for (auto c : kSubtypes) names.push_back(std::string(canonical_name(c)));
  return json{{"header", {{"format", format}, {"subtype_order", names}}}};
}

}  // namespace reviewguard::jsonl
