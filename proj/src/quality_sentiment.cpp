#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "reviewguard/error.hpp"
#include "reviewguard/features/structure_report.hpp"
#include "reviewguard/quality/sentiment.hpp"
#include "reviewguard/util/parallel.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::quality {

using nlohmann::json;

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::NEG: return "NEG";
    case Sentiment::NEU: return "NEU";
    case Sentiment::POS: return "POS";
  }
  return "NEU";
}

std::optional<Sentiment> parse_sentiment(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t.rfind("neg", 0) == 0 || t == "label_0") return Sentiment::NEG;
  if (t.rfind("neu", 0) == 0 || t == "label_1") return Sentiment::NEU;
  if (t.rfind("pos", 0) == 0 || t == "label_2") return Sentiment::POS;
  return std::nullopt;
}

SentimentLabel label_from_scores(std::string review_id, std::array<double, 3> scores) {
  SentimentLabel out;
  out.review_id = std::move(review_id);
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0) throw ValidationError("sentiment scores must be finite and non-negative");
  }
  const double sum = scores[0] + scores[1] + scores[2];
  if (sum <= 0.0) throw ValidationError("sentiment scores sum to zero");
  if (std::fabs(sum - 1.0) > 1e-6) {
    for (auto& s : scores) s /= sum;
    out.renormalized = true;
  }
  out.scores = scores;
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (i != best && scores[i] == scores[best]) out.tie = true;
  }
  out.label = static_cast<Sentiment>(best);
  return out;
}

std::vector<SentimentLabel> classify_sentiment(const std::vector<TextItem>& items, llmio::Client& client) {
  const std::size_t batch = std::max<std::size_t>(1, client.config().batch_size);
  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  for (std::size_t start = 0; start < items.size(); start += batch) {
    chunks.emplace_back(start, std::min(items.size(), start + batch));
  }
  auto run = [&](const std::pair<std::size_t, std::size_t>& chunk) {
    std::vector<SentimentLabel> out;
    std::vector<std::string> texts;
    for (auto i = chunk.first; i < chunk.second; ++i) texts.push_back(items[i].text);
    auto fail_all = [&](const std::string& why) {
      out.clear();
      for (auto i = chunk.first; i < chunk.second; ++i) {
        SentimentLabel l;
        l.review_id = items[i].id;
        l.failure = why;
        out.push_back(std::move(l));
      }
    };
    try {
      auto res = client.classify(texts);
      std::array<std::optional<std::size_t>, 3> column;
      for (std::size_t j = 0; j < res.labels.size(); ++j) {
        if (auto s = parse_sentiment(res.labels[j])) column[static_cast<std::size_t>(*s)] = j;
      }
      if (!column[0] || !column[1] || !column[2]) {
        fail_all("backend labels do not cover NEG/NEU/POS");
        return out;
      }
      for (std::size_t k = 0; k < texts.size(); ++k) {
        const auto& row = res.scores[k];
        const auto id = items[chunk.first + k].id;
        try {
          if (row.size() != res.labels.size()) throw ValidationError("score row width differs from label count");
          out.push_back(label_from_scores(id, {row[*column[0]], row[*column[1]], row[*column[2]]}));
        } catch (const ValidationError& e) {
          SentimentLabel l;
          l.review_id = id;
          l.failure = e.what();
          out.push_back(std::move(l));
        }
      }
    } catch (const llmio::BackendError& e) {
      fail_all(std::string("backend: ") + e.what());
    }
    return out;
  };
  auto parts = parallel_map(chunks, static_cast<std::size_t>(std::max(1, client.config().max_in_flight)), run);
  std::vector<SentimentLabel> out;
  for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out));
  return out;
}

json to_json(const SentimentLabel& s) {
  json j{{"review_id", s.review_id}};
  if (s.failure) {
    j["failure"] = *s.failure;
    return j;
  }
  j["label"] = to_string(s.label);
  j["scores"] = {{"NEG", s.scores[0]}, {"NEU", s.scores[1]}, {"POS", s.scores[2]}};
  j["tie"] = s.tie;
  j["renormalized"] = s.renormalized;
  return j;
}

SentimentLabel sentiment_from_json(const json& j) {
  SentimentLabel s;
  j.at("review_id").get_to(s.review_id);
  if (j.contains("failure")) {
    s.failure = j.at("failure").get<std::string>();
    return s;
  }
  auto l = parse_sentiment(j.at("label").get<std::string>());
  if (!l) throw ValidationError("unknown sentiment label");
  s.label = *l;
  const auto& sc = j.at("scores");
  s.scores = {sc.at("NEG").get<double>(), sc.at("NEU").get<double>(), sc.at("POS").get<double>()};
  s.tie = j.value("tie", false);
  s.renormalized = j.value("renormalized", false);
  return s;
}

std::string SentimentTable::render_chi() const {
  if (!chi) return "χ² n/a";
  const auto p = chi->p_value < 0.001 ? std::string("p < 0.001") : fmt::format("p = {:.3f}", chi->p_value);
  return fmt::format("χ²={:.1f}{}, {}", chi->statistic, features::significance_stars(chi->p_value), p);
}

namespace {

SentimentTable make_table(std::string venue, const std::vector<const LabeledSentiment*>& rows) {
  SentimentTable t;
  t.venue = std::move(venue);
  t.rows[0].group = "SR";
  t.rows[1].group = "DR";
  for (const auto* r : rows) {
    ++t.rows[r->verdict == Verdict::SR ? 0 : 1].counts[static_cast<std::size_t>(r->label)];
  }
  for (auto& row : t.rows) {
    const auto total = std::accumulate(row.counts.begin(), row.counts.end(), std::int64_t{0});
    for (std::size_t j = 0; j < 3; ++j) {
      row.percentages[j] = total == 0 ? 0.0 : 100.0 * static_cast<double>(row.counts[j]) / static_cast<double>(total);
    }
  }
  stats::CountTable observed{{t.rows[0].counts.begin(), t.rows[0].counts.end()},
                             {t.rows[1].counts.begin(), t.rows[1].counts.end()}};
  try {
    t.chi = stats::chi_square(observed);
  } catch (const ValidationError& e) {
    t.chi_note = e.what();
  }
  return t;
}

}  // namespace

std::vector<SentimentTable> sentiment_tables(const std::vector<LabeledSentiment>& rows) {
  std::map<std::string, std::vector<const LabeledSentiment*>> by_venue;
  std::vector<const LabeledSentiment*> all;
  for (const auto& r : rows) {
    by_venue[r.venue].push_back(&r);
    all.push_back(&r);
  }
  std::vector<SentimentTable> out;
  for (const auto& [venue, rs] : by_venue) out.push_back(make_table(venue, rs));
  out.push_back(make_table("", all));
  return out;
}

json to_json(const SentimentTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"group", r.group},
                    {"counts", {{"NEG", r.counts[0]}, {"NEU", r.counts[1]}, {"POS", r.counts[2]}}},
                    {"percentages", {{"NEG", r.percentages[0]}, {"NEU", r.percentages[1]}, {"POS", r.percentages[2]}}}});
  }
  json j{{"venue", t.venue.empty() ? json("all") : json(t.venue)}, {"rows", rows}, {"chi_square", nullptr}};
  if (t.chi) {
    j["chi_square"] = {{"statistic", t.chi->statistic},
                       {"df", t.chi->df},
                       {"p_value", t.chi->p_value},
                       {"expected", t.chi->expected},
                       {"rendered", t.render_chi()}};
  }
  if (t.chi_note) j["chi_square_note"] = *t.chi_note;
  return j;
}

}  // namespace reviewguard::quality
