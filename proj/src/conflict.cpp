#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "reviewguard/conflict/consensus.hpp"
#include "reviewguard/error.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::conflict {

using nlohmann::json;

ConsensusResult consensus(const std::vector<std::int64_t>& scores, double threshold) {
  if (scores.size() < 3) {
    throw ValidationError(fmt::format("insufficient reviews: {} rated, need 3", scores.size()));
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double sum = std::accumulate(scores.begin(), scores.end(), 0.0) - static_cast<double>(*lo) -
                     static_cast<double>(*hi);
  ConsensusResult r;
  r.n_reviews = static_cast<std::int64_t>(scores.size());
  r.consensus = sum / static_cast<double>(scores.size() - 2);
  r.diff_high = static_cast<double>(*hi) - r.consensus;
  r.diff_low = r.consensus - static_cast<double>(*lo);
  r.conflicting = r.diff_high >= threshold || r.diff_low >= threshold;
  return r;
}

double ConflictSummary::percentage() const {
  return considered == 0 ? 0.0 : 100.0 * static_cast<double>(conflicting) / static_cast<double>(considered);
}

std::string ConflictSummary::render(bool latex) const {
  return fmt::format("{} ({:.1f}{})", with_thousands(static_cast<std::int64_t>(conflicting)), percentage(),
                     latex ? "\\%" : "%");
}

std::vector<ConsensusResult> Selection::conflicting() const {
  std::vector<ConsensusResult> out;
  std::copy_if(results.begin(), results.end(), std::back_inserter(out),
               [](const ConsensusResult& r) { return r.conflicting; });
  return out;
}

Selection select_conflicting(const std::vector<corpus::PaperBundle>& papers, double threshold) {
  Selection sel;
  sel.summary.threshold = threshold;
  for (const auto& bundle : papers) {
    std::vector<std::int64_t> scores;
    for (const auto& r : bundle.reviews) {
      if (r.rating) scores.push_back(*r.rating);
    }
    if (scores.size() < 3) {
      sel.summary.excluded.push_back({bundle.paper.paper_id, scores.size()});
      continue;
    }
    auto res = consensus(scores, threshold);
    res.paper_id = bundle.paper.paper_id;
    sel.results.push_back(std::move(res));
  }
  std::sort(sel.results.begin(), sel.results.end(),
            [](const auto& a, const auto& b) { return a.paper_id < b.paper_id; });
  sel.summary.considered = sel.results.size();
  sel.summary.conflicting = static_cast<std::size_t>(
      std::count_if(sel.results.begin(), sel.results.end(), [](const auto& r) { return r.conflicting; }));
  return sel;
}

Selection select_conflicting(const corpus::Store& store, double threshold) {
  return select_conflicting(store.papers(), threshold);
}

json to_json(const ConsensusResult& r) {
  return json{{"paper_id", r.paper_id},   {"n_reviews", r.n_reviews}, {"consensus", r.consensus},
              {"diff_high", r.diff_high}, {"diff_low", r.diff_low},   {"conflicting", r.conflicting}};
}

ConsensusResult consensus_from_json(const json& j) {
  ConsensusResult r;
  j.at("paper_id").get_to(r.paper_id);
  r.n_reviews = j.value("n_reviews", std::int64_t{0});
  r.consensus = j.value("consensus", 0.0);
  r.diff_high = j.value("diff_high", 0.0);
  r.diff_low = j.value("diff_low", 0.0);
  r.conflicting = j.value("conflicting", false);
  return r;
}

json to_json(const ConflictSummary& s) {
  json excluded = json::array();
  for (const auto& e : s.excluded) excluded.push_back({{"paper_id", e.paper_id}, {"rated_reviews", e.rated_reviews}});
  return json{{"threshold", s.threshold},
              {"considered", s.considered},
              {"conflicting", s.conflicting},
              {"percentage", s.percentage()},
              {"rendered", s.render()},
              {"rating_snapshot", s.rating_snapshot},
              {"excluded", excluded}};
}

}  // namespace reviewguard::conflict
