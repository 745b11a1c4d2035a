#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/llmio/client.hpp"
#include "reviewguard/taxonomy.hpp"

namespace reviewguard::quality {

enum class AiVerdict { HumanLike, AiLike };
std::string_view to_string(AiVerdict v);

struct BinocularsOptions {
  double threshold = 0.9;
  std::size_t min_tokens = 0;  // shorter texts get no verdict
};

struct BinocularsResult {
  std::string review_id;
  double log_ppl = 0.0;
  double x_log_ppl = 0.0;
  double score = 0.0;
  std::size_t n_tokens = 0;
  std::optional<AiVerdict> verdict;  // absent below min_tokens
  double threshold = 0.9;
};

// log_ppl = -mean(lp_observer), x_log_ppl = mean(ce_cross), score = ratio.
// Throws ValidationError on empty input, non-finite values or ce_cross <= 0.
BinocularsResult binoculars_score(const std::vector<llmio::TokenRecord>& tokens,
                                  const BinocularsOptions& options = {}, std::string review_id = {});

nlohmann::json to_json(const BinocularsResult& r);
BinocularsResult binoculars_from_json(const nlohmann::json& j);

// File-based alternative to the /score backend: JSONL lines of
// {"review_id": ..., "tokens": [{"lp_observer": .., "ce_cross": ..}, ...]}.
std::map<std::string, std::vector<llmio::TokenRecord>> read_token_file(const std::filesystem::path& path);

struct TemporalRow {
  std::string venue;
  std::int64_t year = 0;
  std::int64_t sr_ai = 0;
  std::int64_t dr_ai = 0;
  std::int64_t sr_total = 0;
  std::int64_t dr_total = 0;
};

struct ReviewContext {
  std::string venue;
  std::int64_t year = 0;
  Verdict verdict = Verdict::SR;
};

// Dense per-venue year range: a year with no detections still gets a row.
std::vector<TemporalRow> temporal_ai_counts(const std::vector<BinocularsResult>& results,
                                            const std::map<std::string, ReviewContext>& context);
nlohmann::json to_json(const TemporalRow& r);
std::string temporal_csv(const std::vector<TemporalRow>& rows);

struct LabeledScore {
  double score = 0.0;
  bool ai = false;
};

struct Calibration {
  double threshold = 0.9;
  double accuracy = 0.0;          // on the fitting portion
  std::optional<double> heldout_accuracy;
  std::size_t n_fit = 0;
  std::size_t n_heldout = 0;
  std::uint64_t seed = 0;
};

// Picks the threshold (midpoints between sorted distinct scores) maximizing
// accuracy of "ai-like iff score < threshold"; ties go to the smallest.
// With heldout_fraction > 0 a seeded shuffle reserves that share for scoring.
Calibration calibrate(std::vector<LabeledScore> samples, double heldout_fraction = 0.0, std::uint64_t seed = 0);
nlohmann::json to_json(const Calibration& c);

}  // namespace reviewguard::quality
