#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reviewguard::corpus {

struct PaperRecord {
  std::string paper_id;
  std::string venue;
  std::int64_t year = 0;
  std::string title;
  std::string abstract;
  std::vector<std::string> review_ids;

  bool operator==(const PaperRecord&) const = default;
};

struct ReviewRecord {
  std::string review_id;
  std::string paper_id;
  std::string text;
  std::optional<std::int64_t> rating;
  std::optional<std::int64_t> confidence;
  std::optional<std::string> created_at;
  std::map<std::string, std::string> raw_fields;

  bool operator==(const ReviewRecord&) const = default;
};

void to_json(nlohmann::json& j, const PaperRecord& p);
void from_json(const nlohmann::json& j, PaperRecord& p);
void to_json(nlohmann::json& j, const ReviewRecord& r);
void from_json(const nlohmann::json& j, ReviewRecord& r);

// Source forms encode scores as "N: description". Returns the integer before
// the first ':' when it parses, else the whole string as an integer, else null.
std::optional<std::int64_t> parse_rating(std::string_view raw);

struct RatingScale {
  std::int64_t min = 1;
  std::int64_t max = 10;
  bool contains(std::int64_t v) const { return v >= min && v <= max; }
};

// Declared rating scales per venue/year; unknown pairs use the default 1-10.
class ScaleTable {
 public:
  void set(const std::string& venue, std::int64_t year, RatingScale scale);
  RatingScale lookup(const std::string& venue, std::int64_t year) const;

 private:
  std::map<std::pair<std::string, std::int64_t>, RatingScale> scales_;
};

}  // namespace reviewguard::corpus
