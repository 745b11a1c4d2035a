#include <map>
#include <optional>

#include "reviewguard/annotate/parse.hpp"

namespace reviewguard::annotate {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::optional<std::size_t> balanced_end(const std::string& s, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

json first_json_array(const std::string& raw) {
  for (auto start = raw.find('['); start != std::string::npos; start = raw.find('[', start + 1)) {
    auto end = balanced_end(raw, start);
    if (!end) continue;
    auto parsed = json::parse(raw.begin() + static_cast<std::ptrdiff_t>(start),
                              raw.begin() + static_cast<std::ptrdiff_t>(*end + 1), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_array()) return parsed;
  }
  throw AnnotationParseError("no JSON array found in model output");
}

AnnotationRecord record_from_reply(const json& item) {
  if (!item.is_object()) throw AnnotationParseError("array element is not an object");
  if (!item.contains("review_id") || !item.at("review_id").is_string()) {
    throw AnnotationParseError("element lacks a string review_id");
  }
  AnnotationRecord r;
  r.review_id = item.at("review_id").get<std::string>();
  if (!item.contains("verdict") || !item.at("verdict").is_string()) {
    throw AnnotationParseError("review " + r.review_id + ": missing verdict");
  }
  const auto verdict = item.at("verdict").get<std::string>();
  auto v = parse_verdict(verdict);
  if (!v) throw AnnotationParseError("review " + r.review_id + ": unknown verdict '" + verdict + "'");
  r.verdict = *v;
  const auto subtypes = item.value("subtypes", json::array());
  if (!subtypes.is_array()) throw AnnotationParseError("review " + r.review_id + ": subtypes must be an array");
  std::vector<Category> subs;
  for (const auto& s : subtypes) {
    if (!s.is_string()) throw AnnotationParseError("review " + r.review_id + ": subtype is not a string");
    auto c = parse_subtype(s.get<std::string>());
    if (!c) throw AnnotationParseError("review " + r.review_id + ": unknown subtype '" + s.get<std::string>() + "'");
    subs.push_back(*c);
  }
  r.subtypes = normalize_subtypes(std::move(subs));
  if (item.contains("rationale") && item.at("rationale").is_string()) {
    r.rationale = item.at("rationale").get<std::string>();
  }
  try {
    r.validate();
  } catch (const ValidationError& e) {
    throw AnnotationParseError(e.what());
  }
  return r;
}

}  // namespace

std::vector<AnnotationRecord> parse_annotation(const std::string& raw, const std::set<std::string>& expected_ids) {
  if (raw.empty()) throw AnnotationParseError("empty model output");
  const auto array = first_json_array(raw);
  std::map<std::string, AnnotationRecord> by_id;
  for (const auto& item : array) {
    auto r = record_from_reply(item);
    if (!expected_ids.contains(r.review_id)) throw AnnotationParseError("unexpected review_id " + r.review_id);
    if (by_id.contains(r.review_id)) throw AnnotationParseError("duplicate review_id " + r.review_id);
    by_id.emplace(r.review_id, std::move(r));
  }
  std::string missing;
  for (const auto& id : expected_ids) {
    if (!by_id.contains(id)) missing += (missing.empty() ? "" : ", ") + id;
  }
  if (!missing.empty()) throw AnnotationParseError("incomplete coverage: missing " + missing);
  std::vector<AnnotationRecord> out;
  for (auto& [id, r] : by_id) out.push_back(std::move(r));
  return out;
}

std::string render_model_reply(const std::vector<AnnotationRecord>& records) {
  ordered_json array = ordered_json::array();
  for (const auto& r : records) {
    ordered_json item;
    item["review_id"] = r.review_id;
    item["verdict"] = canonical_name(r.verdict);
    item["subtypes"] = ordered_json::array();
    for (auto c : r.subtypes) item["subtypes"].push_back(canonical_name(c));
    item["rationale"] = r.rationale;
    array.push_back(std::move(item));
  }
  return "```json\n" + array.dump(2) + "\n```";
}

}  // namespace reviewguard::annotate
