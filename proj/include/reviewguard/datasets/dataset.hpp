#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/annotate/record.hpp"
#include "reviewguard/augment/synthetic.hpp"
#include "reviewguard/corpus/records.hpp"

namespace reviewguard::datasets {

enum class Regime { R_R, R_S, RS_R, RS_RS };
enum class Origin { Real, Synthetic };
enum class Split { Train, Validation, Test };

inline constexpr std::array<Regime, 4> kRegimes = {Regime::R_R, Regime::R_S, Regime::RS_R, Regime::RS_RS};
inline constexpr std::array<Split, 3> kSplits = {Split::Train, Split::Validation, Split::Test};

std::string_view to_string(Regime r);
std::string_view to_string(Origin o);
std::string_view to_string(Split s);
// Accepts "R_R", "rs_r", "RS,R", "R+S,R" and similar spellings.
std::optional<Regime> parse_regime(std::string_view text);
std::optional<Split> parse_split(std::string_view text);

// Origins allowed in the training side (train and validation) and the test side.
bool train_uses(Regime r, Origin o);
bool test_uses(Regime r, Origin o);

using MultiLabel = std::array<int, 6>;  // canonical subtype order

struct EncodedExample {
  std::string example_id;
  std::string text;
  Origin origin = Origin::Real;
  Verdict binary_target = Verdict::SR;
  MultiLabel multilabel_target{};
  std::string paper_id;
  Split split = Split::Train;

  void validate() const;
};

nlohmann::json to_json(const EncodedExample& e);
EncodedExample example_from_json(const nlohmann::json& j);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
  void validate() const;
};

struct BuildInputs {
  std::vector<corpus::ReviewRecord> reviews;             // real review texts
  std::vector<annotate::AnnotationRecord> annotations;   // labels for real reviews (round 0 used)
  std::vector<augment::SyntheticReview> synthetics;
};

struct OriginCounts {
  std::int64_t sr = 0;
  std::int64_t dr = 0;
};

struct DatasetManifest {
  Regime regime = Regime::R_R;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::map<std::string, std::map<std::string, OriginCounts>> counts;  // split -> origin -> class counts
  std::map<std::string, std::string> source_hashes;
  std::map<std::string, std::string> paper_splits;  // paper_id -> split
  std::size_t duplicate_texts = 0;
  std::size_t unlabeled_reviews = 0;  // labeled ids without a stored review text
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

struct BuiltDataset {
  DatasetManifest manifest;
  std::map<Split, std::vector<EncodedExample>> examples;  // each sorted by example_id
};

// Paper-level split stratified on whether a paper has a deficient real
// review; synthetic examples follow their paper's split. Throws
// ValidationError("stratification impossible ...") when a non-empty split
// ratio yields a split missing SR or DR examples.
BuiltDataset build(Regime regime, const BuildInputs& inputs, const SplitRatios& ratios, std::uint64_t seed);

// Writes manifest.json plus train/validation/test .jsonl (each with a header line).
void write(const BuiltDataset& data, const std::filesystem::path& out_dir);
BuiltDataset read(const std::filesystem::path& dir);

struct Violation {
  std::string kind;  // "cross-split-paper", "synthetic-from-test-in-train", "regime-purity", "duplicate-example"
  std::string detail;
};

struct LeakageReport {
  std::vector<Violation> violations;
  bool passed() const { return violations.empty(); }
};

LeakageReport leakage_check(const DatasetManifest& manifest, const std::map<Split, std::vector<EncodedExample>>& examples);
nlohmann::json to_json(const LeakageReport& r);

}  // namespace reviewguard::datasets
