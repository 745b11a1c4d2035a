#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reviewguard/augment/synthetic.hpp"
#include "reviewguard/features/text_metrics.hpp"
#include "support.hpp"

using namespace reviewguard;
using namespace reviewguard::augment;

namespace {

SyntheticReview syn(const std::string& paper, Category c, const std::string& text) {
  SyntheticReview r;
  r.paper_id = paper;
  r.target_category = c;
  r.synthetic_id = paper + ":" + std::string(canonical_name(c));
  r.text = text;
  return r;
}

corpus::PaperRecord paper(const std::string& id, const std::string& title = "Sparse Widgets") {
  corpus::PaperRecord p;
  p.paper_id = id;
  p.venue = "ICLR";
  p.year = 2024;
  p.title = title;
  p.abstract = "We study sparse widgets and show that they compose under mild assumptions.";
  return p;
}

std::unique_ptr<llmio::Client> mock_client(const rgtest::MockLlm& llm) {
  return std::make_unique<llmio::Client>(llmio::backend_config_from_json(llm.backend_config("gen-1")));
}

}  // namespace

TEST(LongestCommonSpan, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> a;
    std::vector<std::string> b;
    for (std::size_t i = 0, n = rng() % 20; i < n; ++i) a.push_back(std::string(1, static_cast<char>('a' + rng() % 3)));
    for (std::size_t i = 0, n = rng() % 20; i < n; ++i) b.push_back(std::string(1, static_cast<char>('a' + rng() % 3)));
    EXPECT_EQ(longest_common_span(a, b), rgtest::oracle::common_span(a, b));
  }
}

TEST(CategoryEcho, LabelLinesAndIdsRemoved) {
  const std::string text =
      "Category: Superficiality\n**SUPERFICIALITY**\nThe paper is fine.\nThis SUPERFICIALITY_X stays.\n"
      "We note SUPERFICIALITY here.";
  const auto out = remove_category_echo(text, Category::SUPERFICIALITY);
  EXPECT_EQ(out.find("Category:"), std::string::npos);
  EXPECT_NE(out.find("The paper is fine."), std::string::npos);
  EXPECT_NE(out.find("SUPERFICIALITY_X"), std::string::npos);
  EXPECT_EQ(out.find("We note SUPERFICIALITY"), std::string::npos);
  EXPECT_EQ(remove_category_echo("SR\nSolid work overall.", Category::SR), "Solid work overall.");
}

TEST(SyntheticChecks, LengthOverlapDuplicate) {
  ValidationRules rules{5, 4};
  const std::string abstract = "alpha beta gamma delta epsilon zeta";
  EXPECT_EQ(check_text("too short", abstract, rules), std::vector<std::string>{"length"});
  EXPECT_EQ(check_text("one two alpha beta gamma delta three", abstract, rules), std::vector<std::string>{"overlap"});
  EXPECT_TRUE(check_text("one two alpha beta gamma three four", abstract, rules).empty());

  std::vector<SyntheticReview> batch{syn("p", Category::SR, "shared text with enough words here"),
                                     syn("p", Category::OTHERS, "shared text with enough words here"),
                                     syn("p", Category::UNINFORMED, "short")};
  auto rep = validate_synthetic(batch, {{"p", abstract}}, rules);
  EXPECT_EQ(rep.records, 3u);
  EXPECT_EQ(rep.duplicate_failures, 2u);
  EXPECT_EQ(rep.length_failures, 1u);
  EXPECT_FALSE(rep.passed());
}

TEST(SyntheticRecord, JsonRoundTrip) {
  auto r = syn("p1", Category::CURSORY_JUDGMENT, "text");
  r.model_id = "m";
  r.created_at = "2024-01-01T00:00:00.000Z";
  auto back = synthetic_from_json(to_json(r));
  EXPECT_EQ(back.synthetic_id, r.synthetic_id);
  EXPECT_EQ(back.target_category, r.target_category);
  EXPECT_EQ(back.created_at, r.created_at);
  // No review metadata is attached to synthetic records.
  EXPECT_FALSE(to_json(r).contains("rating"));
  EXPECT_FALSE(to_json(r).contains("venue"));
}

TEST(Augment, SevenPerPaperAndGapsReconcile) {
  rgtest::MockLlm llm;
  llm.gap_marker("Broken Widgets");
  auto client = mock_client(llm);
  AugmentOptions options;
  options.now = [] { return std::string("2024-05-01T00:00:00.000Z"); };
  auto out = generate({paper("p2"), paper("p1"), paper("p3", "Broken Widgets")}, *client, options);
  EXPECT_EQ(out.records.size() + out.gaps.size(), 3u * 7u);
  EXPECT_EQ(out.records.size(), 14u);
  ASSERT_EQ(out.gaps.size(), 7u);
  for (const auto& g : out.gaps) {
    EXPECT_EQ(g.paper_id, "p3");
    EXPECT_EQ(g.attempts, 2);
    EXPECT_NE(g.reason.find("length"), std::string::npos);
  }
  EXPECT_EQ(out.records.front().synthetic_id, "p1:SR");
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(out.records[i].target_category, kAllCategories[i]);
  for (const auto& r : out.records) {
    EXPECT_EQ(r.model_id, "gen-1");
    EXPECT_EQ(r.created_at, "2024-05-01T00:00:00.000Z");
    EXPECT_GE(features::words(r.text).size(), options.rules.min_tokens);
  }
  std::map<std::string, std::string> abstracts{{"p1", paper("p1").abstract}, {"p2", paper("p2").abstract}};
  EXPECT_TRUE(validate_synthetic(out.records, abstracts).passed());
}

TEST(Augment, EmptyAbstractYieldsSevenGaps) {
  rgtest::MockLlm llm;
  auto client = mock_client(llm);
  auto p = paper("p");
  p.abstract = "";
  auto out = generate_for_paper(p, *client);
  EXPECT_TRUE(out.records.empty());
  EXPECT_EQ(out.gaps.size(), 7u);
  EXPECT_EQ(llm.chat_calls(), 0);
}

TEST(Augment, PromptUsesTitleAndAbstractOnly) {
  auto t = std::make_shared<rgtest::ScriptedTransport>([](const llmio::HttpRequest&) {
    std::mt19937_64 rng(1);
    return rgtest::ok_json(
        {{"choices", {{{"message", {{"role", "assistant"}, {"content", rgtest::random_words(rng, 60)}}}}}}});
  });
  llmio::BackendConfig cfg;
  cfg.base_url = "http://unused";
  cfg.model_id = "g";
  auto client = llmio::Client(cfg, {t, std::make_shared<llmio::SimulatedClock>(), nullptr, nullptr});
  auto p = paper("p");
  generate_for_paper(p, client);
  ASSERT_EQ(t->count(), 7u);
  for (const auto& req : t->requests()) {
    EXPECT_NE(req.body.find(p.title), std::string::npos);
    EXPECT_NE(req.body.find("sparse widgets and show"), std::string::npos);
  }
}
