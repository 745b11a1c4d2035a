#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "reviewguard/annotate/agreement.hpp"
#include "reviewguard/annotate/kappa.hpp"

namespace reviewguard::annotate {

using nlohmann::json;

namespace {

bool has_category(const AnnotationRecord& r, Category c) {
  if (c == Category::SR) return r.verdict == Verdict::SR;
  return std::find(r.subtypes.begin(), r.subtypes.end(), c) != r.subtypes.end();
}

}  // namespace

AgreementReport agreement_report(const std::vector<AnnotationRecord>& records, int round, bool machine_reference) {
  if (round < 1) throw ValidationError("agreement is computed for human rounds (>= 1)");
  // rater -> review -> record
  std::map<std::string, std::map<std::string, const AnnotationRecord*>> by_rater;
  for (const auto& r : records) {
    if (r.round == round && r.source == Source::Human) by_rater[r.annotator_id][r.review_id] = &r;
  }
  AgreementReport rep;
  rep.round = round;
  if (machine_reference) {
    std::map<std::string, const AnnotationRecord*> machine;
    std::string machine_id;
    for (const auto& r : records) {
      if (r.round != 0) continue;
      if (machine_id.empty()) machine_id = r.annotator_id;
      if (r.annotator_id == machine_id) machine.emplace(r.review_id, &r);
    }
    if (!machine.empty()) {
      const auto key = "machine:" + machine_id;
      by_rater[key] = std::move(machine);
      rep.machine_reference = true;
    }
  }
  if (by_rater.size() < 2) {
    throw ValidationError(fmt::format("round {}: need at least 2 annotators, found {}", round, by_rater.size()));
  }

  std::vector<std::string> items;
  for (const auto& [id, rec] : by_rater.begin()->second) {
    if (std::all_of(by_rater.begin(), by_rater.end(), [&](const auto& kv) { return kv.second.contains(id); })) {
      items.push_back(id);
    }
  }
  if (items.empty()) throw ValidationError(fmt::format("round {}: disjoint item sets", round));
  rep.n_items = items.size();
  for (const auto& [rater, _] : by_rater) rep.raters.push_back(rater);

  // presence[rater][category] over items
  std::map<std::string, std::map<Category, std::vector<int>>> presence;
  std::vector<Category> included;
  for (auto c : kAllCategories) {
    bool used = false;
    for (const auto& [rater, recs] : by_rater) {
      auto& v = presence[rater][c];
      for (const auto& id : items) {
        v.push_back(has_category(*recs.at(id), c) ? 1 : 0);
        used = used || v.back() == 1;
      }
    }
    (used ? included : rep.excluded).push_back(c);
  }

  double cohen_sum = 0.0;
  std::size_t cohen_n = 0;
  for (std::size_t a = 0; a < rep.raters.size(); ++a) {
    for (std::size_t b = a + 1; b < rep.raters.size(); ++b) {
      PairAgreement pair{rep.raters[a], rep.raters[b], {}, 0.0};
      for (auto c : included) {
        const double k = cohen_kappa(presence[rep.raters[a]][c], presence[rep.raters[b]][c]);
        pair.kappa[c] = k;
        pair.mean += k;
        cohen_sum += k;
        ++cohen_n;
      }
      pair.mean /= static_cast<double>(included.size());
      rep.pairs.push_back(std::move(pair));
    }
  }
  rep.average_cohen = cohen_sum / static_cast<double>(cohen_n);

  const int m = static_cast<int>(rep.raters.size());
  double fleiss_sum = 0.0;
  for (auto c : included) {
    std::vector<std::vector<int>> counts(items.size(), std::vector<int>(2, 0));
    for (const auto& rater : rep.raters) {
      const auto& v = presence[rater][c];
      for (std::size_t i = 0; i < items.size(); ++i) ++counts[i][static_cast<std::size_t>(v[i])];
    }
    rep.fleiss[c] = fleiss_kappa(counts, m);
    fleiss_sum += rep.fleiss[c];
  }
  rep.average_fleiss = fleiss_sum / static_cast<double>(included.size());
  return rep;
}

std::string AgreementReport::render() const { return fmt::format("{:.4f} and {:.4f}", average_cohen, average_fleiss); }

std::string AgreementReport::footnote() const {
  std::string out =
      "Cohen kappa: per-category presence/absence, averaged over rater pairs and categories. "
      "Fleiss kappa: per category over all raters, averaged over categories.";
  if (!excluded.empty()) {
    out += " Excluded (used by no rater, kappa undefined):";
    for (auto c : excluded) out += fmt::format(" {}", canonical_name(c));
    out += ".";
  }
  return out;
}

json to_json(const AgreementReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    json per = json::object();
    for (const auto& [c, k] : p.kappa) per[std::string(canonical_name(c))] = k;
    pairs.push_back({{"rater_a", p.rater_a}, {"rater_b", p.rater_b}, {"per_category", per}, {"mean", p.mean}});
  }
  json fleiss = json::object();
  for (const auto& [c, k] : r.fleiss) fleiss[std::string(canonical_name(c))] = k;
  json excluded = json::array();
  for (auto c : r.excluded) excluded.push_back(canonical_name(c));
  return json{{"round", r.round},
              {"n_items", r.n_items},
              {"raters", r.raters},
              {"machine_reference", r.machine_reference},
              {"pairs", pairs},
              {"fleiss", fleiss},
              {"excluded_categories", excluded},
              {"average_cohen", r.average_cohen},
              {"average_fleiss", r.average_fleiss},
              {"rendered", r.render()},
              {"footnote", r.footnote()}};
}

}  // namespace reviewguard::annotate
