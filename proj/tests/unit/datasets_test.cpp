#include <random>

#include <gtest/gtest.h>

#include "reviewguard/datasets/dataset.hpp"
#include "support.hpp"

using namespace reviewguard;
using namespace reviewguard::datasets;

namespace {

bool has_violation(const LeakageReport& r, const std::string& kind) {
  return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) { return v.kind == kind; });
}

std::size_t count(const BuiltDataset& d, Split s, Origin o) {
  const auto& v = d.examples.at(s);
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const auto& e) { return e.origin == o; }));
}

}  // namespace

TEST(Regimes, NamesAndParsing) {
  EXPECT_EQ(parse_regime("rs_r"), Regime::RS_R);
  EXPECT_EQ(parse_regime("R+S,R"), Regime::RS_R);
  EXPECT_EQ(parse_regime("R,S"), Regime::R_S);
  EXPECT_FALSE(parse_regime("S_S"));
  EXPECT_TRUE(train_uses(Regime::RS_RS, Origin::Synthetic));
  EXPECT_FALSE(test_uses(Regime::RS_R, Origin::Synthetic));
  EXPECT_FALSE(train_uses(Regime::R_S, Origin::Synthetic));
  EXPECT_FALSE(test_uses(Regime::R_S, Origin::Real));
}

TEST(EncodedExample, TargetConsistency) {
  EncodedExample e;
  e.example_id = "x";
  e.text = "t";
  e.paper_id = "p";
  EXPECT_NO_THROW(e.validate());
  e.multilabel_target[2] = 1;
  EXPECT_THROW(e.validate(), ValidationError);
  e.binary_target = Verdict::DR;
  EXPECT_NO_THROW(e.validate());
  e.multilabel_target = {};
  EXPECT_THROW(e.validate(), ValidationError);
}

TEST(BuildDataset, SameSeedSameManifest) {
  std::mt19937_64 rng(1);
  const auto inputs = rgtest::dataset_inputs(rng, 10);
  for (auto regime : kRegimes) {
    auto a = build(regime, inputs, {}, 7);
    auto b = build(regime, inputs, {}, 7);
    EXPECT_EQ(to_json(a.manifest).dump(), to_json(b.manifest).dump());
    EXPECT_EQ(a.manifest.paper_splits.size(), 10u);
  }
}

TEST(BuildDataset, RegimePurityAndPartition) {
  std::mt19937_64 rng(2);
  const auto inputs = rgtest::dataset_inputs(rng, 20);
  for (auto regime : kRegimes) {
    auto d = build(regime, inputs, {}, 3);
    EXPECT_TRUE(leakage_check(d.manifest, d.examples).passed()) << to_string(regime);
    for (auto split : kSplits) {
      for (auto o : {Origin::Real, Origin::Synthetic}) {
        const bool allowed = split == Split::Test ? test_uses(regime, o) : train_uses(regime, o);
        if (!allowed) {
          EXPECT_EQ(count(d, split, o), 0u) << to_string(regime) << " " << to_string(split);
        }
      }
    }
    EXPECT_GT(count(d, Split::Test, test_uses(regime, Origin::Real) ? Origin::Real : Origin::Synthetic), 0u);
    // Each eligible example lands in exactly one split; the rest were excluded by the regime.
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& [split, v] : d.examples) {
      for (const auto& e : v) {
        EXPECT_TRUE(seen.insert(e.example_id).second);
        EXPECT_EQ(d.manifest.paper_splits.at(e.paper_id), to_string(split));
        ++total;
      }
    }
    std::size_t eligible = 0;
    for (const auto& r : inputs.reviews) {
      const auto s = *parse_split(d.manifest.paper_splits.at(r.paper_id));
      eligible += s == Split::Test ? test_uses(regime, Origin::Real) : train_uses(regime, Origin::Real);
    }
    for (const auto& s : inputs.synthetics) {
      const auto sp = *parse_split(d.manifest.paper_splits.at(s.paper_id));
      eligible += sp == Split::Test ? test_uses(regime, Origin::Synthetic) : train_uses(regime, Origin::Synthetic);
    }
    EXPECT_EQ(total, eligible);
  }
}

TEST(BuildDataset, RsrTestSplitHasNoSynthetic) {
  std::mt19937_64 rng(3);
  auto d = build(Regime::RS_R, rgtest::dataset_inputs(rng, 10), {}, 7);
  EXPECT_EQ(count(d, Split::Test, Origin::Synthetic), 0u);
  EXPECT_GT(count(d, Split::Train, Origin::Synthetic), 0u);
  EXPECT_GT(count(d, Split::Test, Origin::Real), 0u);
}

TEST(BuildDataset, TrainProportionsFollowSourceOnUniformFixture) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t per_paper = 1 + seed % 4;
    const auto inputs = rgtest::dataset_inputs(rng, 12 + seed, per_paper);
    for (auto regime : {Regime::RS_R, Regime::RS_RS}) {
      auto d = build(regime, inputs, {}, seed);
      const auto real = count(d, Split::Train, Origin::Real);
      const auto syn = count(d, Split::Train, Origin::Synthetic);
      EXPECT_EQ(real * 7, syn * per_paper);
    }
  }
}

TEST(BuildDataset, StratificationImpossibleRejected) {
  std::mt19937_64 rng(4);
  auto inputs = rgtest::dataset_inputs(rng, 10);
  for (auto& a : inputs.annotations) {
    a.verdict = Verdict::SR;
    a.subtypes.clear();
  }
  EXPECT_THROW(build(Regime::R_R, inputs, {}, 1), ValidationError);
  EXPECT_THROW(build(Regime::R_S, {inputs.reviews, inputs.annotations, {}}, {}, 1), ValidationError);
}

TEST(BuildDataset, DuplicateTextsCountedNotDropped) {
  std::mt19937_64 rng(5);
  auto inputs = rgtest::dataset_inputs(rng, 10);
  inputs.reviews[1].text = inputs.reviews[0].text;
  auto d = build(Regime::R_R, inputs, {}, 1);
  EXPECT_EQ(d.manifest.duplicate_texts, 1u);
  std::size_t n = 0;
  for (const auto& [s, v] : d.examples) n += v.size();
  EXPECT_EQ(n, inputs.reviews.size());
}

TEST(LeakageCheck, PlantedViolationsRejected) {
  std::mt19937_64 rng(6);
  const auto inputs = rgtest::dataset_inputs(rng, 10);
  const auto clean = build(Regime::RS_RS, inputs, {}, 7);
  ASSERT_TRUE(leakage_check(clean.manifest, clean.examples).passed());

  // A train paper's example moved into test under a fresh id.
  {
    auto ex = clean.examples;
    auto moved = ex[Split::Train].front();
    moved.example_id += "_copy";
    moved.split = Split::Test;
    ex[Split::Test].push_back(moved);
    auto rep = leakage_check(clean.manifest, ex);
    ASSERT_TRUE(has_violation(rep, "cross-split-paper"));
    EXPECT_NE(rep.violations.front().detail.find(moved.paper_id), std::string::npos);
  }
  // A synthetic record of a test paper planted in train.
  {
    auto ex = clean.examples;
    auto it = std::find_if(ex[Split::Test].begin(), ex[Split::Test].end(),
                           [](const auto& e) { return e.origin == Origin::Synthetic; });
    ASSERT_NE(it, ex[Split::Test].end());
    auto planted = *it;
    planted.split = Split::Train;
    ex[Split::Test].erase(it);
    ex[Split::Train].push_back(planted);
    EXPECT_TRUE(has_violation(leakage_check(clean.manifest, ex), "synthetic-from-test-in-train"));
  }
  // The same example id present in two splits.
  {
    auto ex = clean.examples;
    ex[Split::Validation].push_back(ex[Split::Train].front());
    EXPECT_TRUE(has_violation(leakage_check(clean.manifest, ex), "duplicate-example"));
  }
  // Synthetic test examples in an R_R manifest.
  {
    auto rr = build(Regime::R_R, inputs, {}, 7);
    auto ex = rr.examples;
    auto s = clean.examples.at(Split::Test);
    for (const auto& e : s) {
      if (e.origin == Origin::Synthetic) ex[Split::Test].push_back(e);
    }
    EXPECT_TRUE(has_violation(leakage_check(rr.manifest, ex), "regime-purity"));
  }
}

TEST(BuildDataset, WriteReadRoundTrip) {
  rgtest::TempDir dir;
  std::mt19937_64 rng(8);
  auto d = build(Regime::RS_R, rgtest::dataset_inputs(rng, 10), {}, 7);
  write(d, dir.path());
  auto back = read(dir.path());
  EXPECT_EQ(to_json(back.manifest).dump(), to_json(d.manifest).dump());
  for (auto s : kSplits) {
    ASSERT_EQ(back.examples[s].size(), d.examples[s].size());
    for (std::size_t i = 0; i < d.examples[s].size(); ++i) {
      EXPECT_EQ(to_json(back.examples[s][i]), to_json(d.examples[s][i]));
    }
  }
}
