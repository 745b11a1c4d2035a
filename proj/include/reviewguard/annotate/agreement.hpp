#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/annotate/record.hpp"

namespace reviewguard::annotate {

struct PairAgreement {
  std::string rater_a;
  std::string rater_b;
  std::map<Category, double> kappa;  // included categories only
  double mean = 0.0;
};

struct AgreementReport {
  int round = 0;
  std::size_t n_items = 0;
  std::vector<std::string> raters;
  bool machine_reference = false;
  std::vector<PairAgreement> pairs;
  std::map<Category, double> fleiss;
  std::vector<Category> excluded;  // no rater marked these on any item
  double average_cohen = 0.0;
  double average_fleiss = 0.0;

  // "0.4899 and 0.4740"
  std::string render() const;
  std::string footnote() const;
};

// Per-category presence/absence agreement for one round. Raters are the
// round's human annotators plus, when `machine_reference` is set, the round-0
// machine labels. Items are the reviews every rater labeled. Cohen kappa is
// averaged over rater pairs and categories; Fleiss kappa over categories.
AgreementReport agreement_report(const std::vector<AnnotationRecord>& records, int round,
                                 bool machine_reference = true);

nlohmann::json to_json(const AgreementReport& r);

}  // namespace reviewguard::annotate
