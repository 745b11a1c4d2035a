#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/annotate/record.hpp"

namespace reviewguard::annotate {

// Uniform sample of `n` reviews stratified by machine verdict (largest-
// remainder allocation), skipping `exclude`. Result sorted by review_id.
std::vector<std::string> sample_validation_items(const std::vector<AnnotationRecord>& machine, std::size_t n,
                                                 std::uint64_t seed, const std::set<std::string>& exclude = {});

struct ValidationRound {
  int number = 1;
  std::vector<std::string> items;
  std::uint64_t seed = 0;
  bool closed = false;  // labels are blind until the round closes
  std::string criteria_version;
  std::string note;
};

nlohmann::json to_json(const ValidationRound& r);
ValidationRound round_from_json(const nlohmann::json& j);

// Rounds persisted as one JSON document, rewritten atomically on change.
class RoundRegistry {
 public:
  static RoundRegistry open(const std::filesystem::path& path);

  const std::vector<ValidationRound>& rounds() const { return rounds_; }
  const ValidationRound* find(int number) const;

  // Samples items not used by earlier rounds. Throws ValidationError when an
  // earlier round is still open or there is nothing to sample.
  const ValidationRound& open_round(const std::vector<AnnotationRecord>& machine, std::size_t size,
                                    std::uint64_t seed, std::string criteria_version, std::string note = {});
  const ValidationRound& close_round(int number);

 private:
  void save() const;
  std::filesystem::path path_;
  std::vector<ValidationRound> rounds_;
};

}  // namespace reviewguard::annotate
