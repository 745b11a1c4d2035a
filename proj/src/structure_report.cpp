#include "reviewguard/features/structure_report.hpp"

#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "reviewguard/error.hpp"

namespace reviewguard::features {

namespace {

struct MetricSpec {
  const char* name;
  std::function<std::optional<double>(const LabeledReview&)> get;
};

std::vector<MetricSpec> metric_specs() {
  auto count = [](std::int64_t StructuralFeatures::*field) {
    return [field](const LabeledReview& r) -> std::optional<double> {
      return static_cast<double>(r.features.*field);
    };
  };
  return {
      {"rating score", [](const LabeledReview& r) { return r.rating; }},
      {"confidence score", [](const LabeledReview& r) { return r.confidence; }},
      {"linsear write formula",
       [](const LabeledReview& r) -> std::optional<double> { return r.features.linsear_write; }},
      {"sentence count", count(&StructuralFeatures::sentence_count)},
      {"lexicon count", count(&StructuralFeatures::lexicon_count)},
      {"syllable count", count(&StructuralFeatures::syllable_count)},
      {"difficult words", count(&StructuralFeatures::difficult_words)},
      {"monosyllable count", count(&StructuralFeatures::monosyllable_count)},
  };
}

}  // namespace

std::string significance_stars(double p_value) {
  if (p_value < 0.001) return "***";
  if (p_value < 0.01) return "**";
  if (p_value < 0.05) return "*";
  return "";
}

StructureReport structure_report(std::span<const LabeledReview> reviews) {
  StructureReport report;
  report.display_threshold = kDisplayThreshold;
  report.easy_list_hash = Lexicon::bundled().easy_list_hash();
  report.scope = "real reviews only; synthetic reviews carry no rating/confidence metadata";
  for (const auto& r : reviews) (r.sufficient ? report.n_sr : report.n_dr) += 1;
  if (report.n_sr == 0 || report.n_dr == 0) {
    throw ValidationError("structure report needs at least one SR and one DR review");
  }

  for (const auto& spec : metric_specs()) {
    MetricRow row;
    row.summary.metric = spec.name;
    std::vector<double> values;
    std::vector<double> indicator;
    std::vector<double> sr;
    std::vector<double> dr;
    for (const auto& r : reviews) {
      auto v = spec.get(r);
      if (!v || !std::isfinite(*v)) {
        ++row.excluded;
        continue;
      }
      values.push_back(*v);
      indicator.push_back(r.sufficient ? 1.0 : 0.0);
      (r.sufficient ? sr : dr).push_back(*v);
    }
    row.summary.n_sr = sr.size();
    row.summary.n_dr = dr.size();
    row.summary.mean_sr = stats::mean(sr);
    row.summary.mean_dr = stats::mean(dr);
    row.summary.sd_sr = stats::sample_sd(sr);
    row.summary.sd_dr = stats::sample_sd(dr);
    try {
      row.correlation = stats::spearman(values, indicator, spec.name);
      row.stars = significance_stars(row.correlation->p_value);
      row.displayed = std::fabs(row.correlation->rho) > kDisplayThreshold;
    } catch (const ValidationError& e) {
      row.note = std::string("correlation undefined: ") + e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string render_row(const MetricRow& row) {
  std::string corr = row.correlation ? fmt::format("{:.3f}", row.correlation->rho) : "n/a";
  std::string out = fmt::format("{} {:.2f} ({:.2f}) {}", row.summary.metric, row.summary.mean_sr,
                                row.summary.mean_dr, corr);
  if (!row.stars.empty()) out += " " + row.stars;
  return out;
}

std::string render_table(const StructureReport& report) {
  std::string out;
  out += fmt::format("# {}\n", report.scope);
  out += fmt::format("# SR n={}  DR n={}  easy-word list sha256={}\n", report.n_sr, report.n_dr,
                     report.easy_list_hash);
  out += "# *** p<0.001, ** p<0.01, * p<0.05; rows with |rho| <= 0.1 are marked hidden\n";
  out += fmt::format("{:<24}{:>22}{:>14}{:>6}{:>9}\n", "Metric", "Mean SR (DR)", "Correlation",
                     "", "Shown");
  for (const auto& row : report.rows) {
    const auto mean = fmt::format("{:.2f} ({:.2f})", row.summary.mean_sr, row.summary.mean_dr);
    const auto corr = row.correlation ? fmt::format("{:.3f}", row.correlation->rho) : "n/a";
    out += fmt::format("{:<24}{:>22}{:>14}{:>6}{:>9}\n", row.summary.metric, mean, corr, row.stars,
                       row.displayed ? "yes" : "hidden");
  }
  return out;
}

nlohmann::json to_json(const StructureReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json r{{"metric", row.summary.metric},
                     {"mean_SR", row.summary.mean_sr},
                     {"mean_DR", row.summary.mean_dr},
                     {"sd_SR", row.summary.sd_sr},
                     {"sd_DR", row.summary.sd_dr},
                     {"n_SR", row.summary.n_sr},
                     {"n_DR", row.summary.n_dr},
                     {"excluded", row.excluded},
                     {"stars", row.stars},
                     {"displayed", row.displayed},
                     {"rendered", render_row(row)}};
    if (row.correlation) {
      r["rho"] = row.correlation->rho;
      r["p_value"] = row.correlation->p_value;
      r["n"] = row.correlation->n;
    } else {
      r["rho"] = nullptr;
      r["p_value"] = nullptr;
      r["note"] = row.note;
    }
    rows.push_back(std::move(r));
  }
  return nlohmann::json{{"scope", report.scope},
                        {"n_SR", report.n_sr},
                        {"n_DR", report.n_dr},
                        {"display_threshold", report.display_threshold},
                        {"easy_list_sha256", report.easy_list_hash},
                        {"significance", "*** p<0.001, ** p<0.01, * p<0.05 (two-sided)"},
                        {"rows", rows}};
}

}  // namespace reviewguard::features
