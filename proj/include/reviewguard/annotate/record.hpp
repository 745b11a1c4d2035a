#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "reviewguard/error.hpp"
#include "reviewguard/taxonomy.hpp"

namespace reviewguard::annotate {

enum class Source { Llm, Human, SyntheticTemplate };

std::string_view to_string(Source s);
std::optional<Source> parse_source(std::string_view text);

struct AnnotationRecord {
  std::string review_id;
  Verdict verdict = Verdict::SR;
  std::vector<Category> subtypes;  // canonical order, no duplicates
  std::string rationale;
  Source source = Source::Llm;
  std::string annotator_id;
  int round = 0;
  std::string template_hash;
  std::string criteria_version;

  // Throws ValidationError on a verdict/subtype mismatch or a negative round.
  void validate() const;
  // Same judgment, ignoring provenance fields.
  bool same_labels(const AnnotationRecord& other) const;
  bool operator==(const AnnotationRecord&) const = default;
};

// Sorts and de-duplicates; throws ValidationError on SR or unknown entries.
std::vector<Category> normalize_subtypes(std::vector<Category> subtypes);

nlohmann::json to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

// Raised when (review_id, annotator_id, round) is already present.
class DuplicateAnnotation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Append-only JSONL file of annotation records. Human rounds never replace
// round-0 machine records; any repeated key is rejected.
class AnnotationStore {
 public:
  static AnnotationStore open(const std::filesystem::path& path);
  static AnnotationStore in_memory(std::vector<AnnotationRecord> records = {});

  void append(const AnnotationRecord& record);
  bool contains(const std::string& review_id, const std::string& annotator_id, int round) const;
  const AnnotationRecord* find(const std::string& review_id, const std::string& annotator_id, int round) const;

  const std::vector<AnnotationRecord>& records() const { return records_; }
  std::vector<AnnotationRecord> round(int r) const;
  // Round-0 records; when several machine annotators exist the first per review wins.
  std::vector<AnnotationRecord> machine_labels() const;

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<AnnotationRecord> records_;
  std::set<std::tuple<std::string, std::string, int>> keys_;
};

}  // namespace reviewguard::annotate
