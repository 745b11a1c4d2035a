#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/corpus/records.hpp"
#include "reviewguard/llmio/client.hpp"
#include "reviewguard/taxonomy.hpp"

namespace reviewguard::augment {

struct Sampling {
  double temperature = 0.85;
  double top_p = 1.0;
};

struct SyntheticReview {
  std::string synthetic_id;  // "<paper_id>:<CATEGORY>"
  std::string paper_id;
  Category target_category = Category::SR;
  std::string text;
  std::string model_id;
  std::string template_hash;
  Sampling sampling;
  std::string created_at;
};

struct GapEntry {
  std::string paper_id;
  Category category = Category::SR;
  std::string reason;
  int attempts = 0;
};

nlohmann::json to_json(const SyntheticReview& r);
SyntheticReview synthetic_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GapEntry& g);
GapEntry gap_from_json(const nlohmann::json& j);

struct ValidationRules {
  std::size_t min_tokens = 40;
  // Reject any contiguous run of this many tokens shared with the abstract.
  std::size_t overlap_cap = 12;
};

// Longest run of consecutive equal tokens appearing in both sequences.
std::size_t longest_common_span(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Drops label lines ("Category: Superficiality", a bare "SR") and bare
// canonical ids so the text does not announce its own target.
std::string remove_category_echo(const std::string& text, Category category);

// Empty when the text passes; otherwise the failed rule ("length", "overlap").
std::vector<std::string> check_text(const std::string& text, const std::string& abstract, const ValidationRules& rules);

struct ValidationReport {
  std::size_t records = 0;
  std::size_t length_failures = 0;
  std::size_t overlap_failures = 0;
  std::size_t duplicate_failures = 0;  // records sharing their text with another category
  std::vector<std::pair<std::string, std::string>> failures;  // (synthetic_id, rule)
  bool passed() const { return length_failures + overlap_failures + duplicate_failures == 0; }
};

// `abstracts` maps paper_id to abstract; records without one skip the overlap rule.
ValidationReport validate_synthetic(const std::vector<SyntheticReview>& batch,
                                    const std::map<std::string, std::string>& abstracts,
                                    const ValidationRules& rules = {});
nlohmann::json to_json(const ValidationReport& r);

struct AugmentOptions {
  ValidationRules rules;
  int max_parallel = 4;
  std::function<std::string()> now;  // created_at source; defaults to the UTC wall clock
};

struct PaperSynthesis {
  std::vector<SyntheticReview> records;  // category rank order
  std::vector<GapEntry> gaps;
};

// Seven generations in canonical category order from title and abstract only. Each failed generation is retried
// once and then recorded as a gap.
PaperSynthesis generate_for_paper(const corpus::PaperRecord& paper, llmio::Client& client,
                                  const AugmentOptions& options = {});

// Across papers in parallel; output sorted by (paper_id, category rank).
PaperSynthesis generate(const std::vector<corpus::PaperRecord>& papers, llmio::Client& client,
                        const AugmentOptions& options = {});

}  // namespace reviewguard::augment
