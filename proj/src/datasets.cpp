#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "reviewguard/datasets/dataset.hpp"
#include "reviewguard/util/jsonl.hpp"
#include "reviewguard/util/shuffle.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::datasets {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::R_R: return "R_R";
    case Regime::R_S: return "R_S";
    case Regime::RS_R: return "RS_R";
    case Regime::RS_RS: return "RS_RS";
  }
  return "R_R";
}

std::string_view to_string(Origin o) { return o == Origin::Real ? "real" : "synthetic"; }

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "train";
}

std::optional<Regime> parse_regime(std::string_view text) {
  std::string t;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (c == '_' || c == ',') t.push_back('_');
  }
  if (t == "R_R") return Regime::R_R;
  if (t == "R_S") return Regime::R_S;
  if (t == "RS_R") return Regime::RS_R;
  if (t == "RS_RS") return Regime::RS_RS;
  return std::nullopt;
}

std::optional<Split> parse_split(std::string_view text) {
  for (auto s : kSplits) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

bool train_uses(Regime r, Origin o) {
  return o == Origin::Real || r == Regime::RS_R || r == Regime::RS_RS;
}

bool test_uses(Regime r, Origin o) {
  switch (r) {
    case Regime::R_R:
    case Regime::RS_R: return o == Origin::Real;
    case Regime::R_S: return o == Origin::Synthetic;
    case Regime::RS_RS: return true;
  }
  return false;
}

namespace {

bool allowed(Regime r, Split s, Origin o) { return s == Split::Test ? test_uses(r, o) : train_uses(r, o); }

MultiLabel encode(const std::vector<Category>& subtypes) {
  MultiLabel m{};
  for (auto c : subtypes) m[subtype_index(c)] = 1;
  return m;
}

}  // namespace

void EncodedExample::validate() const {
  const bool any = std::any_of(multilabel_target.begin(), multilabel_target.end(), [](int b) { return b != 0; });
  for (int b : multilabel_target) {
    if (b != 0 && b != 1) throw ValidationError("example " + example_id + ": multilabel bits must be 0 or 1");
  }
  if (binary_target == Verdict::SR && any) throw ValidationError("example " + example_id + ": SR with subtype bits set");
  if (binary_target == Verdict::DR && !any) throw ValidationError("example " + example_id + ": DR without subtype bits");
}

json to_json(const EncodedExample& e) {
  return json{{"example_id", e.example_id},
              {"text", e.text},
              {"origin", to_string(e.origin)},
              {"binary_target", canonical_name(e.binary_target)},
              {"multilabel_target", e.multilabel_target},
              {"paper_id", e.paper_id},
              {"split", to_string(e.split)}};
}

EncodedExample example_from_json(const json& j) {
  EncodedExample e;
  j.at("example_id").get_to(e.example_id);
  j.at("text").get_to(e.text);
  const auto origin = j.at("origin").get<std::string>();
  if (origin != "real" && origin != "synthetic") throw ValidationError("unknown origin " + origin);
  e.origin = origin == "real" ? Origin::Real : Origin::Synthetic;
  auto v = parse_verdict(j.at("binary_target").get<std::string>());
  if (!v) throw ValidationError("unknown binary_target");
  e.binary_target = *v;
  const auto bits = j.at("multilabel_target").get<std::vector<int>>();
  if (bits.size() != 6) throw ValidationError("multilabel_target must have 6 entries");
  std::copy(bits.begin(), bits.end(), e.multilabel_target.begin());
  j.at("paper_id").get_to(e.paper_id);
  auto s = parse_split(j.at("split").get<std::string>());
  if (!s) throw ValidationError("unknown split");
  e.split = *s;
  e.validate();
  return e;
}

void SplitRatios::validate() const {
  if (train < 0 || validation < 0 || test < 0) throw ValidationError("split ratios must be non-negative");
  if (std::fabs(train + validation + test - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");
  if (train <= 0 || test <= 0) throw ValidationError("train and test ratios must be positive");
}

json to_json(const DatasetManifest& m) {
  json counts = json::object();
  for (const auto& [split, by_origin] : m.counts) {
    for (const auto& [origin, c] : by_origin) counts[split][origin] = {{"SR", c.sr}, {"DR", c.dr}};
  }
  json subtype_order = json::array();
  for (auto c : kSubtypes) subtype_order.push_back(canonical_name(c));
  return json{{"format", "reviewguard-dataset-v1"},
              {"regime", to_string(m.regime)},
              {"seed", m.seed},
              {"ratios", {{"train", m.ratios.train}, {"validation", m.ratios.validation}, {"test", m.ratios.test}}},
              {"counts", counts},
              {"source_hashes", m.source_hashes},
              {"paper_splits", m.paper_splits},
              {"duplicate_texts", m.duplicate_texts},
              {"unlabeled_reviews", m.unlabeled_reviews},
              {"subtype_order", subtype_order}};
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  auto r = parse_regime(j.at("regime").get<std::string>());
  if (!r) throw ValidationError("manifest: unknown regime");
  m.regime = *r;
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& ratios = j.at("ratios");
  m.ratios = {ratios.at("train").get<double>(), ratios.at("validation").get<double>(), ratios.at("test").get<double>()};
  const auto counts = j.value("counts", json::object());
  for (const auto& [split, by_origin] : counts.items()) {
    for (const auto& [origin, c] : by_origin.items()) {
      m.counts[split][origin] = {c.at("SR").get<std::int64_t>(), c.at("DR").get<std::int64_t>()};
    }
  }
  m.source_hashes = j.value("source_hashes", std::map<std::string, std::string>{});
  m.paper_splits = j.value("paper_splits", std::map<std::string, std::string>{});
  m.duplicate_texts = j.value("duplicate_texts", std::size_t{0});
  m.unlabeled_reviews = j.value("unlabeled_reviews", std::size_t{0});
  return m;
}

BuiltDataset build(Regime regime, const BuildInputs& inputs, const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  std::map<std::string, const corpus::ReviewRecord*> reviews;
  for (const auto& r : inputs.reviews) reviews[r.review_id] = &r;

  // Round-0 labels, first annotator per review.
  std::map<std::string, const annotate::AnnotationRecord*> labels;
  for (const auto& a : inputs.annotations) {
    if (a.round == 0) labels.emplace(a.review_id, &a);
  }

  std::vector<EncodedExample> pool;
  BuiltDataset out;
  for (const auto& [id, label] : labels) {
    auto it = reviews.find(id);
    if (it == reviews.end()) {
      ++out.manifest.unlabeled_reviews;
      continue;
    }
    EncodedExample e;
    e.example_id = id;
    e.text = it->second->text;
    e.origin = Origin::Real;
    e.binary_target = label->verdict;
    e.multilabel_target = encode(label->subtypes);
    e.paper_id = it->second->paper_id;
    pool.push_back(std::move(e));
  }
  for (const auto& s : inputs.synthetics) {
    EncodedExample e;
    e.example_id = s.synthetic_id;
    e.text = s.text;
    e.origin = Origin::Synthetic;
    e.binary_target = s.target_category == Category::SR ? Verdict::SR : Verdict::DR;
    if (s.target_category != Category::SR) e.multilabel_target[subtype_index(s.target_category)] = 1;
    e.paper_id = s.paper_id;
    pool.push_back(std::move(e));
  }
  if (pool.empty()) throw ValidationError("nothing to build: no labeled reviews or synthetic records");
  if (std::none_of(pool.begin(), pool.end(), [](const auto& e) { return e.origin == Origin::Real; })) {
    throw ValidationError("annotated corpus is empty");
  }
  if ((regime != Regime::R_R) &&
      std::none_of(pool.begin(), pool.end(), [](const auto& e) { return e.origin == Origin::Synthetic; })) {
    throw ValidationError(fmt::format("regime {} needs synthetic records", to_string(regime)));
  }

  // Stratum per paper: real DR present, real SR only, or synthetic only.
  std::map<std::string, int> stratum;
  for (const auto& e : pool) {
    auto& s = stratum.try_emplace(e.paper_id, 2).first->second;
    if (e.origin == Origin::Real) s = std::min(s, e.binary_target == Verdict::DR ? 0 : 1);
  }
  std::map<int, std::vector<std::string>> by_stratum;
  for (const auto& [paper, s] : stratum) by_stratum[s].push_back(paper);

  std::mt19937_64 rng(seed);
  std::map<std::string, Split> assignment;
  for (auto& [s, papers] : by_stratum) {
    seeded_shuffle(papers, rng);
    const auto n = static_cast<double>(papers.size());
    auto n_test = static_cast<std::size_t>(std::llround(n * ratios.test));
    auto n_val = static_cast<std::size_t>(std::llround(n * ratios.validation));
    n_test = std::min(n_test, papers.size());
    n_val = std::min(n_val, papers.size() - n_test);
    for (std::size_t i = 0; i < papers.size(); ++i) {
      assignment[papers[i]] = i < n_test ? Split::Test : (i < n_test + n_val ? Split::Validation : Split::Train);
    }
  }

  std::set<std::string> texts;
  for (auto& e : pool) {
    e.split = assignment.at(e.paper_id);
    if (!allowed(regime, e.split, e.origin)) continue;
    e.validate();
    if (!texts.insert(e.text).second) ++out.manifest.duplicate_texts;
    auto& c = out.manifest.counts[std::string(to_string(e.split))][std::string(to_string(e.origin))];
    ++(e.binary_target == Verdict::SR ? c.sr : c.dr);
    out.examples[e.split].push_back(e);
  }
  for (auto split : kSplits) {
    auto& v = out.examples[split];
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.example_id < b.example_id; });
    const double ratio = split == Split::Train ? ratios.train : (split == Split::Test ? ratios.test : ratios.validation);
    if (ratio <= 0.0) continue;
    const auto sr = std::count_if(v.begin(), v.end(), [](const auto& e) { return e.binary_target == Verdict::SR; });
    const auto dr = static_cast<std::int64_t>(v.size()) - sr;
    if (sr == 0 || dr == 0) {
      throw ValidationError(fmt::format("stratification impossible: {} split of {} has SR={} DR={} ({} papers total)",
                                        to_string(split), to_string(regime), sr, dr, stratum.size()));
    }
  }

  auto& m = out.manifest;
  m.regime = regime;
  m.seed = seed;
  m.ratios = ratios;
  for (const auto& [paper, split] : assignment) m.paper_splits[paper] = std::string(to_string(split));

  auto hash_of = [](std::vector<json> lines) {
    std::sort(lines.begin(), lines.end(), [](const json& a, const json& b) { return a.dump() < b.dump(); });
    std::string all;
    for (const auto& l : lines) all += jsonl::dump_line(l) + "\n";
    return sha256_hex(all);
  };
  std::vector<json> rv;
  for (const auto& r : inputs.reviews) rv.push_back(json(r));
  std::vector<json> an;
  for (const auto& a : inputs.annotations) an.push_back(annotate::to_json(a));
  std::vector<json> sy;
  for (const auto& s : inputs.synthetics) sy.push_back(augment::to_json(s));
  m.source_hashes = {{"reviews", hash_of(rv)}, {"annotations", hash_of(an)}, {"synthetics", hash_of(sy)}};
  return out;
}

void write(const BuiltDataset& data, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (auto split : kSplits) {
    std::vector<json> lines{jsonl::make_header("reviewguard-examples-v1")};
    auto it = data.examples.find(split);
    if (it != data.examples.end()) {
      for (const auto& e : it->second) lines.push_back(to_json(e));
    }
    jsonl::write_atomic(out_dir / (std::string(to_string(split)) + ".jsonl"), lines);
  }
  jsonl::write_text_atomic(out_dir / "manifest.json", to_json(data.manifest).dump(2) + "\n");
}

BuiltDataset read(const fs::path& dir) {
  BuiltDataset data;
  data.manifest = manifest_from_json(json::parse(jsonl::read_text(dir / "manifest.json")));
  for (auto split : kSplits) {
    const auto path = dir / (std::string(to_string(split)) + ".jsonl");
    auto& v = data.examples[split];
    if (!fs::exists(path)) continue;
    jsonl::read(path, [&](const json& j, std::size_t line) {
      try {
        v.push_back(example_from_json(j));
      } catch (const std::exception& e) {
        throw ParseError(path.string(), line, e.what());
      }
    });
  }
  return data;
}

LeakageReport leakage_check(const DatasetManifest& manifest, const std::map<Split, std::vector<EncodedExample>>& examples) {
  LeakageReport rep;
  std::map<std::string, std::set<Split>> paper_splits;
  std::map<std::string, std::set<Split>> example_splits;
  std::set<std::string> test_papers;
  for (const auto& [split, v] : examples) {
    for (const auto& e : v) {
      paper_splits[e.paper_id].insert(e.split);
      paper_splits[e.paper_id].insert(split);
      example_splits[e.example_id].insert(split);
      if (split == Split::Test) test_papers.insert(e.paper_id);
    }
  }
  for (const auto& [paper, split] : manifest.paper_splits) {
    if (split == "test") test_papers.insert(paper);
  }
  for (const auto& [paper, splits] : paper_splits) {
    std::set<std::string> names;
    for (auto s : splits) names.insert(std::string(to_string(s)));
    auto assigned = manifest.paper_splits.find(paper);
    if (assigned != manifest.paper_splits.end()) names.insert(assigned->second);
    if (names.size() > 1) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      rep.violations.push_back({"cross-split-paper", fmt::format("paper {} appears in {}", paper, list)});
    }
  }
  for (const auto& [id, splits] : example_splits) {
    if (splits.size() > 1) rep.violations.push_back({"duplicate-example", "example " + id + " appears in several splits"});
  }
  for (const auto& [split, v] : examples) {
    std::set<Origin> origins;
    for (const auto& e : v) {
      origins.insert(e.origin);
      if (split != Split::Test && e.origin == Origin::Synthetic && test_papers.contains(e.paper_id)) {
        rep.violations.push_back({"synthetic-from-test-in-train",
                                  fmt::format("synthetic {} of test paper {} is in {}", e.example_id, e.paper_id,
                                              to_string(split))});
      }
      if (!allowed(manifest.regime, split, e.origin)) {
        rep.violations.push_back({"regime-purity", fmt::format("{} example {} in {} split of {}", to_string(e.origin),
                                                               e.example_id, to_string(split), to_string(manifest.regime))});
      }
    }
    if (v.empty() || split == Split::Validation) continue;
    for (auto o : {Origin::Real, Origin::Synthetic}) {
      if (allowed(manifest.regime, split, o) && !origins.contains(o)) {
        rep.violations.push_back({"regime-purity", fmt::format("{} split of {} has no {} examples", to_string(split),
                                                               to_string(manifest.regime), to_string(o))});
      }
    }
  }
  return rep;
}

json to_json(const LeakageReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) v.push_back({{"kind", x.kind}, {"detail", x.detail}});
  return json{{"passed", r.passed()}, {"violations", v}};
}

}  // namespace reviewguard::datasets
