#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/corpus/store.hpp"

namespace reviewguard::conflict {

struct ConsensusResult {
  std::string paper_id;
  std::int64_t n_reviews = 0;
  double consensus = 0.0;
  double diff_high = 0.0;
  double diff_low = 0.0;
  bool conflicting = false;
};

// Mean after dropping exactly one highest and one lowest score.
// Throws ValidationError("insufficient reviews") below three scores.
ConsensusResult consensus(const std::vector<std::int64_t>& scores, double threshold = 3.0);

struct Exclusion {
  std::string paper_id;
  std::size_t rated_reviews = 0;
};

struct ConflictSummary {
  double threshold = 3.0;
  std::size_t considered = 0;
  std::size_t conflicting = 0;
  std::vector<Exclusion> excluded;
  std::string rating_snapshot = "latest";

  double percentage() const;
  // "6,634 (14.6%)"; latex=true escapes the percent sign.
  std::string render(bool latex = false) const;
};

struct Selection {
  std::vector<ConsensusResult> results;  // every considered paper, sorted by paper_id
  ConflictSummary summary;

  std::vector<ConsensusResult> conflicting() const;
};

Selection select_conflicting(const std::vector<corpus::PaperBundle>& papers, double threshold = 3.0);
Selection select_conflicting(const corpus::Store& store, double threshold = 3.0);

nlohmann::json to_json(const ConsensusResult& r);
ConsensusResult consensus_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ConflictSummary& s);

}  // namespace reviewguard::conflict
