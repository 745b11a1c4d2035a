#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/datasets/dataset.hpp"

namespace reviewguard::evalkit {

enum class Task { Binary, Multilabel };
std::string_view to_string(Task t);
std::optional<Task> parse_task(std::string_view text);

struct PredictionRecord {
  std::string example_id;
  Task task = Task::Binary;
  std::optional<Verdict> pred_binary;
  std::optional<datasets::MultiLabel> pred_labels;
  std::optional<std::vector<double>> scores;

  void validate() const;
};

nlohmann::json to_json(const PredictionRecord& p);
PredictionRecord prediction_from_json(const nlohmann::json& j);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

struct ClassMetrics {
  std::string name;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t support = 0;  // gold positives
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<std::string> zero_division;  // which ratios were 0/0
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  Task task = Task::Binary;
  std::string regime;
  std::string model;
  std::size_t n_examples = 0;
  std::vector<ClassMetrics> classes;
  Averages macro;
  Averages micro;
  std::vector<std::string> notes;  // one per class that hit the 0/0 -> 0 convention
};

// Coverage must be exact: every gold id predicted once, no extras.
class CoverageError : public ValidationError {
 public:
  CoverageError(const std::string& what, std::vector<std::string> missing, std::vector<std::string> extra)
      : ValidationError(what), missing_(std::move(missing)), extra_(std::move(extra)) {}
  const std::vector<std::string>& missing() const { return missing_; }
  const std::vector<std::string>& extra() const { return extra_; }

 private:
  std::vector<std::string> missing_;
  std::vector<std::string> extra_;
};

// Per-class counts from tp/fp/fn with the 0/0 -> 0 convention.
ClassMetrics class_metrics(std::string name, std::int64_t tp, std::int64_t fp, std::int64_t fn);

EvalReport macro_binary(const std::vector<PredictionRecord>& preds, const std::vector<datasets::EncodedExample>& gold);
EvalReport macro_multilabel(const std::vector<PredictionRecord>& preds,
                            const std::vector<datasets::EncodedExample>& gold);

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);
std::string render_table(const EvalReport& r);

struct RegimeCell {
  double value = 0.0;
  std::optional<double> ratio;  // absent ("n/a") when the baseline is 0
  bool column_max = false;
};

struct RegimeRow {
  std::string regime;
  RegimeCell precision;
  RegimeCell recall;
  RegimeCell f1;
};

struct RegimeTable {
  std::string model;
  Task task = Task::Binary;
  std::string baseline;
  std::vector<RegimeRow> rows;
};

// Macro P/R/F1 per regime with ratios to the baseline regime's values.
// Throws ValidationError with fewer than 2 reports, mixed model/task, or no
// baseline report.
RegimeTable regime_report(const std::vector<EvalReport>& reports, const std::string& baseline = "R_R");
nlohmann::json to_json(const RegimeTable& t);
std::string render_table(const RegimeTable& t);

}  // namespace reviewguard::evalkit
