#pragma once

#include <set>
#include <string>
#include <vector>

#include "reviewguard/annotate/record.hpp"

namespace reviewguard::annotate {

// A model reply that cannot be accepted as-is (a repair retry may follow).
class AnnotationParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Final failure after the repair retry; carries the last raw reply.
class UnparseableAnnotation : public Error {
 public:
  UnparseableAnnotation(const std::string& why, std::string raw)
      : Error("unparseable annotation: " + why), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

// Extracts the first balanced JSON array from `raw` and converts it into one
// record per expected id, in id order. Records carry source=llm, round=0 and
// empty annotator/provenance fields for the caller to fill.
std::vector<AnnotationRecord> parse_annotation(const std::string& raw, const std::set<std::string>& expected_ids);

// A well-formed reply for `records`, the inverse of parse_annotation.
std::string render_model_reply(const std::vector<AnnotationRecord>& records);

}  // namespace reviewguard::annotate
