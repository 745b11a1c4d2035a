#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "reviewguard/quality/binoculars.hpp"
#include "reviewguard/util/jsonl.hpp"
#include "reviewguard/util/shuffle.hpp"

namespace reviewguard::quality {

using nlohmann::json;

std::string_view to_string(AiVerdict v) { return v == AiVerdict::AiLike ? "ai-like" : "human-like"; }

BinocularsResult binoculars_score(const std::vector<llmio::TokenRecord>& tokens, const BinocularsOptions& options,
                                  std::string review_id) {
  if (tokens.empty()) throw ValidationError("binoculars: empty token record list");
  double lp = 0.0;
  double ce = 0.0;
  for (const auto& t : tokens) {
    if (!std::isfinite(t.lp_observer) || !std::isfinite(t.ce_cross)) {
      throw ValidationError("binoculars: non-finite token record");
    }
    if (t.ce_cross <= 0.0) throw ValidationError("binoculars: ce_cross must be positive");
    lp += t.lp_observer;
    ce += t.ce_cross;
  }
  const double n = static_cast<double>(tokens.size());
  BinocularsResult r;
  r.review_id = std::move(review_id);
  r.n_tokens = tokens.size();
  r.log_ppl = -lp / n;
  r.x_log_ppl = ce / n;
  if (r.log_ppl <= 0.0) throw ValidationError("binoculars: observer log-perplexity must be positive");
  r.score = r.log_ppl / r.x_log_ppl;
  r.threshold = options.threshold;
  if (tokens.size() >= options.min_tokens) {
    r.verdict = r.score < options.threshold ? AiVerdict::AiLike : AiVerdict::HumanLike;
  }
  return r;
}

json to_json(const BinocularsResult& r) {
  return json{{"review_id", r.review_id},
              {"log_ppl", r.log_ppl},
              {"x_log_ppl", r.x_log_ppl},
              {"score", r.score},
              {"n_tokens", r.n_tokens},
              {"verdict", r.verdict ? json(to_string(*r.verdict)) : json(nullptr)},
              {"threshold", r.threshold}};
}

BinocularsResult binoculars_from_json(const json& j) {
  BinocularsResult r;
  j.at("review_id").get_to(r.review_id);
  r.log_ppl = j.at("log_ppl").get<double>();
  r.x_log_ppl = j.at("x_log_ppl").get<double>();
  r.score = j.at("score").get<double>();
  r.n_tokens = j.value("n_tokens", std::size_t{0});
  if (j.contains("verdict") && j.at("verdict").is_string()) {
    r.verdict = j.at("verdict").get<std::string>() == "ai-like" ? AiVerdict::AiLike : AiVerdict::HumanLike;
  }
  r.threshold = j.value("threshold", 0.9);
  return r;
}

std::map<std::string, std::vector<llmio::TokenRecord>> read_token_file(const std::filesystem::path& path) {
  std::map<std::string, std::vector<llmio::TokenRecord>> out;
  jsonl::read(path, [&](const json& j, std::size_t line) {
    try {
      auto& v = out[j.at("review_id").get<std::string>()];
      for (const auto& t : j.at("tokens")) {
        v.push_back({t.at("lp_observer").get<double>(), t.at("ce_cross").get<double>()});
      }
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line, e.what());
    }
  });
  return out;
}

std::vector<TemporalRow> temporal_ai_counts(const std::vector<BinocularsResult>& results,
                                            const std::map<std::string, ReviewContext>& context) {
  std::map<std::pair<std::string, std::int64_t>, TemporalRow> rows;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> span;
  for (const auto& r : results) {
    auto it = context.find(r.review_id);
    if (it == context.end() || !r.verdict) continue;
    const auto& ctx = it->second;
    auto& row = rows[{ctx.venue, ctx.year}];
    row.venue = ctx.venue;
    row.year = ctx.year;
    const bool sr = ctx.verdict == Verdict::SR;
    ++(sr ? row.sr_total : row.dr_total);
    if (*r.verdict == AiVerdict::AiLike) ++(sr ? row.sr_ai : row.dr_ai);
    auto [s, inserted] = span.try_emplace(ctx.venue, ctx.year, ctx.year);
    if (!inserted) {
      s->second.first = std::min(s->second.first, ctx.year);
      s->second.second = std::max(s->second.second, ctx.year);
    }
  }
  std::vector<TemporalRow> out;
  for (const auto& [venue, years] : span) {
    for (auto y = years.first; y <= years.second; ++y) {
      auto it = rows.find({venue, y});
      out.push_back(it != rows.end() ? it->second : TemporalRow{venue, y, 0, 0, 0, 0});
    }
  }
  return out;
}

json to_json(const TemporalRow& r) {
  return json{{"venue", r.venue},   {"year", r.year},         {"sr_ai", r.sr_ai},
              {"dr_ai", r.dr_ai},   {"sr_total", r.sr_total}, {"dr_total", r.dr_total}};
}

std::string temporal_csv(const std::vector<TemporalRow>& rows) {
  std::string out = "venue,year,sr_ai,dr_ai,sr_total,dr_total\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", r.venue, r.year, r.sr_ai, r.dr_ai, r.sr_total, r.dr_total);
  }
  return out;
}

namespace {

double accuracy_at(const std::vector<LabeledScore>& s, double threshold) {
  if (s.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& x : s) correct += ((x.score < threshold) == x.ai) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(s.size());
}

}  // namespace

Calibration calibrate(std::vector<LabeledScore> samples, double heldout_fraction, std::uint64_t seed) {
  if (samples.empty()) throw ValidationError("calibrate: no labeled samples");
  if (heldout_fraction < 0.0 || heldout_fraction >= 1.0) throw ValidationError("calibrate: heldout fraction must be in [0, 1)");
  Calibration c;
  c.seed = seed;
  std::vector<LabeledScore> heldout;
  if (heldout_fraction > 0.0) {
    std::mt19937_64 rng(seed);
    seeded_shuffle(samples, rng);
    const auto n_hold = static_cast<std::size_t>(std::floor(heldout_fraction * static_cast<double>(samples.size())));
    heldout.assign(samples.end() - static_cast<std::ptrdiff_t>(n_hold), samples.end());
    samples.resize(samples.size() - n_hold);
    if (samples.empty()) throw ValidationError("calibrate: nothing left to fit after the held-out split");
  }
  std::set<double> distinct;
  for (const auto& s : samples) distinct.insert(s.score);
  std::vector<double> candidates{*distinct.begin() - 1e-9};
  for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it) candidates.push_back((*it + *std::next(it)) / 2.0);
  candidates.push_back(*distinct.rbegin() + 1e-9);
  c.accuracy = -1.0;
  for (double t : candidates) {
    const double acc = accuracy_at(samples, t);
    if (acc > c.accuracy) {
      c.accuracy = acc;
      c.threshold = t;
    }
  }
  c.n_fit = samples.size();
  c.n_heldout = heldout.size();
  if (!heldout.empty()) c.heldout_accuracy = accuracy_at(heldout, c.threshold);
  return c;
}

json to_json(const Calibration& c) {
  return json{{"threshold", c.threshold},
              {"accuracy", c.accuracy},
              {"heldout_accuracy", c.heldout_accuracy ? json(*c.heldout_accuracy) : json(nullptr)},
              {"n_fit", c.n_fit},
              {"n_heldout", c.n_heldout},
              {"seed", c.seed}};
}

}  // namespace reviewguard::quality
