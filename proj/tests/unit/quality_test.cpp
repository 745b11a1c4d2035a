#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "reviewguard/quality/binoculars.hpp"
#include "reviewguard/quality/sentiment.hpp"
#include "reviewguard/quality/similarity.hpp"
#include "support.hpp"

using namespace reviewguard;
using namespace reviewguard::quality;
using llmio::TokenRecord;

// ---- sentiment ---------------------------------------------------------------------

TEST(Sentiment, ArgmaxAndTies) {
  auto a = label_from_scores("r", {0.1, 0.7, 0.2});
  EXPECT_EQ(a.label, Sentiment::NEU);
  EXPECT_FALSE(a.tie);
  auto b = label_from_scores("r", {0.2, 0.4, 0.4});
  EXPECT_EQ(b.label, Sentiment::NEU);
  EXPECT_TRUE(b.tie);
  auto c = label_from_scores("r", {0.4, 0.2, 0.4});
  EXPECT_EQ(c.label, Sentiment::NEG);
  EXPECT_TRUE(c.tie);
  auto d = label_from_scores("r", {2.0, 1.0, 1.0});
  EXPECT_TRUE(d.renormalized);
  EXPECT_NEAR(d.scores[0] + d.scores[1] + d.scores[2], 1.0, 1e-12);
  EXPECT_EQ(d.label, Sentiment::NEG);
}

TEST(Sentiment, ClassifyPreservesOrder) {
  rgtest::MockLlm llm;
  auto cfg = llmio::backend_config_from_json(llm.backend_config("clf"));
  cfg.batch_size = 3;
  llmio::Client client(cfg);
  std::vector<TextItem> items;
  for (int i = 0; i < 20; ++i) {
    const char* text = i % 3 == 0 ? "they are rude" : i % 3 == 1 ? "this is vague" : "clear and useful";
    items.push_back({"r" + std::to_string(i), text});
  }
  auto labels = classify_sentiment(items, client);
  ASSERT_EQ(labels.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(labels[i].review_id, items[i].id);
    const auto expected = i % 3 == 0 ? Sentiment::NEG : i % 3 == 1 ? Sentiment::NEU : Sentiment::POS;
    EXPECT_EQ(labels[i].label, expected);
    EXPECT_FALSE(labels[i].failure);
  }
}

TEST(Sentiment, BackendFailureMarksItems) {
  auto t = std::make_shared<rgtest::ScriptedTransport>([](const llmio::HttpRequest&) {
    llmio::HttpResponse r;
    r.status = 503;
    return r;
  });
  llmio::BackendConfig cfg;
  cfg.base_url = "http://unused";
  cfg.model_id = "clf";
  cfg.retry.max_attempts = 2;
  llmio::Client client(cfg, {t, std::make_shared<llmio::SimulatedClock>(), nullptr, nullptr});
  auto labels = classify_sentiment({{"a", "x"}, {"b", "y"}}, client);
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_TRUE(labels[0].failure);
  EXPECT_TRUE(labels[1].failure);
  EXPECT_EQ(t->count(), 2u);
}

TEST(Sentiment, TablesPercentagesAndChiSquare) {
  std::vector<LabeledSentiment> rows;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 300; ++i) {
    const auto venue = i % 2 ? "ICLR" : "NeurIPS";
    const auto verdict = i % 3 ? Verdict::SR : Verdict::DR;
    const auto label = static_cast<Sentiment>(verdict == Verdict::DR ? rng() % 2 : 1 + rng() % 2);
    rows.push_back({venue, verdict, label});
  }
  auto tables = sentiment_tables(rows);
  ASSERT_EQ(tables.size(), 3u);
  EXPECT_EQ(tables[0].venue, "ICLR");
  EXPECT_EQ(tables[1].venue, "NeurIPS");
  EXPECT_EQ(tables[2].venue, "");
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      EXPECT_NEAR(r.percentages[0] + r.percentages[1] + r.percentages[2], 100.0, 1e-9);
    }
    ASSERT_TRUE(t.chi);
    EXPECT_EQ(t.chi->df, 2);
    EXPECT_GT(t.chi->statistic, 0.0);
  }
  const auto& pooled = tables[2].rows[0];
  EXPECT_EQ(pooled.group, "SR");
  EXPECT_EQ(pooled.counts[0] + pooled.counts[1] + pooled.counts[2], 200);
}

TEST(Sentiment, DegenerateTableReportsNote) {
  std::vector<LabeledSentiment> rows{{"ICLR", Verdict::SR, Sentiment::POS}, {"ICLR", Verdict::DR, Sentiment::POS}};
  auto tables = sentiment_tables(rows);
  EXPECT_FALSE(tables.back().chi);
  ASSERT_TRUE(tables.back().chi_note);
}

// ---- binoculars --------------------------------------------------------------------

TEST(Binoculars, EqualMeansGiveOne) {
  std::vector<TokenRecord> t{{-0.5, 0.5}, {-2.0, 2.0}, {-1.25, 1.25}};
  EXPECT_DOUBLE_EQ(binoculars_score(t).score, 1.0);
}

TEST(Binoculars, TwoTokenClosedForm) {
  auto r = binoculars_score({{-1.0, 2.0}, {-3.0, 2.0}});
  EXPECT_NEAR(r.log_ppl, 2.0, 1e-12);
  EXPECT_NEAR(r.x_log_ppl, 2.0, 1e-12);
  EXPECT_NEAR(r.score, 1.0, 1e-12);
  EXPECT_EQ(r.n_tokens, 2u);
  EXPECT_EQ(r.verdict, AiVerdict::HumanLike);
}

TEST(Binoculars, ScalingAndPermutation) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> lp(-8.0, -0.01);
  std::uniform_real_distribution<double> ce(0.1, 6.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TokenRecord> t(1 + rng() % 50);
    for (auto& x : t) x = {lp(rng), ce(rng)};
    const auto base = binoculars_score(t).score;
    auto scaled = t;
    for (auto& x : scaled) x.ce_cross *= 2;
    EXPECT_NEAR(binoculars_score(scaled).score, base / 2, 1e-12 * base);
    auto perm = t;
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_NEAR(binoculars_score(perm).score, base, 1e-12 * base);
  }
}

TEST(Binoculars, VerdictThresholdAndErrors) {
  BinocularsOptions o;
  o.threshold = 0.9;
  EXPECT_EQ(binoculars_score({{-0.8, 1.0}}, o).verdict, AiVerdict::AiLike);
  EXPECT_EQ(binoculars_score({{-0.9, 1.0}}, o).verdict, AiVerdict::HumanLike);
  o.min_tokens = 5;
  EXPECT_FALSE(binoculars_score({{-0.8, 1.0}}, o).verdict);
  EXPECT_THROW(binoculars_score({}), ValidationError);
  EXPECT_THROW(binoculars_score({{-1.0, 0.0}}), ValidationError);
  EXPECT_THROW(binoculars_score({{NAN, 1.0}}), ValidationError);
  EXPECT_THROW(binoculars_score({{-1.0, INFINITY}}), ValidationError);
}

TEST(Binoculars, TemporalCountsAreDense) {
  std::vector<BinocularsResult> results;
  std::map<std::string, ReviewContext> ctx;
  auto add = [&](const std::string& id, const std::string& venue, std::int64_t year, Verdict v, bool ai) {
    BinocularsResult r;
    r.review_id = id;
    r.verdict = ai ? AiVerdict::AiLike : AiVerdict::HumanLike;
    results.push_back(r);
    ctx[id] = {venue, year, v};
  };
  for (int i = 0; i < 3; ++i) add("a" + std::to_string(i), "ICLR", 2021, Verdict::SR, true);
  add("b", "ICLR", 2021, Verdict::DR, false);
  add("c", "ICLR", 2023, Verdict::DR, true);
  add("d", "NeurIPS", 2022, Verdict::SR, false);
  auto rows = temporal_ai_counts(results, ctx);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].year, 2021);
  EXPECT_EQ(rows[0].sr_ai, 3);
  EXPECT_EQ(rows[0].dr_total, 1);
  EXPECT_EQ(rows[1].year, 2022);
  EXPECT_EQ(rows[1].sr_total + rows[1].dr_total, 0);
  EXPECT_EQ(rows[2].dr_ai, 1);
  EXPECT_EQ(rows[3].venue, "NeurIPS");
  const auto csv = temporal_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "venue,year,sr_ai,dr_ai,sr_total,dr_total");
  EXPECT_NE(csv.find("ICLR,2022,0,0,0,0"), std::string::npos);
}

TEST(Calibration, SeparableScoresAndSmallestTie) {
  std::vector<LabeledScore> s{{0.5, true}, {0.6, true}, {0.7, true}, {1.0, false}, {1.1, false}};
  auto c = calibrate(s);
  EXPECT_DOUBLE_EQ(c.accuracy, 1.0);
  EXPECT_NEAR(c.threshold, 0.85, 1e-12);
  // Every threshold ties on accuracy when all labels agree: smallest wins.
  auto all = calibrate({{0.3, false}, {0.4, false}});
  EXPECT_LT(all.threshold, 0.3);
  auto h = calibrate(s, 0.4, 9);
  EXPECT_EQ(h.n_heldout, 2u);
  EXPECT_EQ(h.n_fit, 3u);
  EXPECT_TRUE(h.heldout_accuracy);
  EXPECT_THROW(calibrate({}), ValidationError);
}

TEST(Binoculars, TokenFileAndJson) {
  rgtest::TempDir dir;
  {
    std::ofstream out(dir / "tokens.jsonl");
    out << R"({"review_id":"r1","tokens":[{"lp_observer":-1,"ce_cross":2}]})" << "\n";
  }
  auto m = read_token_file(dir / "tokens.jsonl");
  ASSERT_EQ(m.size(), 1u);
  auto r = binoculars_score(m.at("r1"), {}, "r1");
  auto back = binoculars_from_json(to_json(r));
  EXPECT_EQ(back.review_id, "r1");
  EXPECT_DOUBLE_EQ(back.score, r.score);
  EXPECT_EQ(back.verdict, r.verdict);
}

// ---- similarity ------------------------------------------------------------------

TEST(Cosine, ClosedForms) {
  EXPECT_DOUBLE_EQ(cosine({1, 2, 3}, {1, 2, 3})->value, 1.0);
  EXPECT_DOUBLE_EQ(cosine({1, 0}, {0, 1})->value, 0.0);
  const double h = 1 / std::sqrt(2.0);
  EXPECT_NEAR(cosine({1, 0}, {h, h})->value, std::sqrt(2.0) / 2, 1e-12);
  EXPECT_FALSE(cosine({0, 0}, {1, 1}).has_value());
  EXPECT_THROW(cosine({1, 0}, {1, 0, 0}), ValidationError);
}

TEST(Cosine, AlwaysWithinBounds) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> u(1 + rng() % 32);
    for (auto& x : u) x = g(rng);
    auto v = u;
    if (trial % 2) {
      for (auto& x : v) x *= 1e8 * (1 + rng() % 3);
    } else {
      for (auto& x : v) x = g(rng);
    }
    auto c = cosine(u, v);
    ASSERT_TRUE(c);
    EXPECT_GE(c->value, -1.0);
    EXPECT_LE(c->value, 1.0);
  }
}

TEST(Histogram, BinsCountsAndPeak) {
  auto h = histogram({1.0, 0.99, 0.5, 0.51, -1.0});
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::int64_t{0}), 5);
  EXPECT_EQ(Histogram::bin_of(1.0), kBins - 1);
  EXPECT_EQ(Histogram::bin_of(-1.0), 0u);
  EXPECT_TRUE(h.peak_tie);
  EXPECT_NEAR(h.peak_center, 0.51, 1e-12);
  auto single = histogram({0.3, 0.305});
  EXPECT_FALSE(single.peak_tie);
  EXPECT_NEAR(single.peak_center, 0.31, 1e-12);
}

TEST(Similarity, GroupsFromVectors) {
  std::vector<SimilarityPair> pairs{{"1", "real/SR/ICLR", "a", "b"},
                                    {"2", "real/DR/ICLR", "a", "c"},
                                    {"3", "real/SR/ICLR", "a", "d"},
                                    {"4", "real/SR/ICLR", "a", "e"}};
  std::vector<std::pair<std::vector<double>, std::vector<double>>> vecs{
      {{1, 0}, {1, 0}}, {{1, 0}, {0, 1}}, {{1, 0}, {-1, 0}}, {{0, 0}, {1, 0}}};
  auto stats = similarity_from_vectors(pairs, vecs);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].group, "real/DR/ICLR");
  EXPECT_EQ(stats[1].cosines.size(), 2u);
  EXPECT_EQ(stats[1].cosines[0].first, "1");
  EXPECT_EQ(stats[1].failures, std::vector<std::string>{"4"});
  EXPECT_EQ(std::accumulate(stats[1].histogram.counts.begin(), stats[1].histogram.counts.end(), std::int64_t{0}), 2);
}

TEST(Similarity, IdenticalTextsThroughBackend) {
  rgtest::MockLlm llm;
  llmio::Client client(llmio::backend_config_from_json(llm.backend_config("emb")));
  auto stats = similarity_distribution({{"1", "g", "same words here", "same words here"}}, client);
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_NEAR(stats[0].cosines.at(0).second, 1.0, 1e-12);
}
