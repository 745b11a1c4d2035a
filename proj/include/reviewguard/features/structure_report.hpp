#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/features/text_metrics.hpp"
#include "reviewguard/stats/correlation.hpp"

namespace reviewguard::features {

using stats::CorrelationResult;

// One real, annotated review with its metadata and text metrics.
struct LabeledReview {
  std::string review_id;
  bool sufficient = false;
  std::optional<double> rating;
  std::optional<double> confidence;
  StructuralFeatures features;
};

struct GroupSummary {
  std::string metric;
  double mean_sr = 0.0;
  double mean_dr = 0.0;
  double sd_sr = 0.0;
  double sd_dr = 0.0;
  std::size_t n_sr = 0;
  std::size_t n_dr = 0;
};

struct MetricRow {
  GroupSummary summary;
  std::optional<CorrelationResult> correlation;  // empty when undefined
  std::string stars;
  bool displayed = false;  // |rho| > display threshold
  std::size_t excluded = 0;  // rows lacking this metric
  std::string note;
};

struct StructureReport {
  std::vector<MetricRow> rows;
  std::size_t n_sr = 0;
  std::size_t n_dr = 0;
  double display_threshold = 0.1;
  std::string easy_list_hash;
  std::string scope;
};

inline constexpr double kDisplayThreshold = 0.1;

// "***" for p < 0.001, "**" for p < 0.01, "*" for p < 0.05, "" otherwise.
std::string significance_stars(double p_value);

// Per metric: SR/DR means and Spearman's rho between the metric and the
// binary SR indicator (1 = SR, 0 = DR). Metrics in table order: rating score,
// confidence score, linsear write formula, sentence count, lexicon count,
// syllable count, difficult words, monosyllable count.
StructureReport structure_report(std::span<const LabeledReview> reviews);

// "rating score 5.37 (3.74) 0.256 ***"
std::string render_row(const MetricRow& row);
std::string render_table(const StructureReport& report);
nlohmann::json to_json(const StructureReport& report);

}  // namespace reviewguard::features
