#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "reviewguard/annotate/rounds.hpp"
#include "reviewguard/util/jsonl.hpp"
#include "reviewguard/util/shuffle.hpp"

namespace reviewguard::annotate {

using nlohmann::json;

std::vector<std::string> sample_validation_items(const std::vector<AnnotationRecord>& machine, std::size_t n,
                                                 std::uint64_t seed, const std::set<std::string>& exclude) {
  std::map<Verdict, std::vector<std::string>> strata;
  std::set<std::string> seen;
  for (const auto& r : machine) {
    if (r.round != 0 || exclude.contains(r.review_id) || !seen.insert(r.review_id).second) continue;
    strata[r.verdict].push_back(r.review_id);
  }
  const std::size_t total = seen.size();
  n = std::min(n, total);
  if (n == 0) return {};

  // Largest-remainder allocation of n across strata.
  std::vector<std::pair<Verdict, std::size_t>> alloc;
  std::vector<std::pair<double, Verdict>> remainders;
  std::size_t given = 0;
  for (auto& [v, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    const double exact = static_cast<double>(n) * static_cast<double>(ids.size()) / static_cast<double>(total);
    const auto base = static_cast<std::size_t>(std::floor(exact));
    alloc.emplace_back(v, base);
    remainders.emplace_back(exact - static_cast<double>(base), v);
    given += base;
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; given < n; ++i, ++given) {
    for (auto& [v, k] : alloc) {
      if (v == remainders[i].second) ++k;
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  for (auto& [v, k] : alloc) {
    auto ids = strata[v];
    seeded_shuffle(ids, rng);
    out.insert(out.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(out.begin(), out.end());
  return out;
}

json to_json(const ValidationRound& r) {
  return json{{"round", r.number}, {"items", r.items},
              {"seed", r.seed},    {"closed", r.closed},
              {"criteria_version", r.criteria_version}, {"note", r.note}};
}

ValidationRound round_from_json(const json& j) {
  ValidationRound r;
  r.number = j.at("round").get<int>();
  r.items = j.at("items").get<std::vector<std::string>>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.closed = j.value("closed", false);
  r.criteria_version = j.value("criteria_version", std::string{});
  r.note = j.value("note", std::string{});
  return r;
}

RoundRegistry RoundRegistry::open(const std::filesystem::path& path) {
  RoundRegistry reg;
  reg.path_ = path;
  if (std::filesystem::exists(path)) {
    const auto doc = json::parse(jsonl::read_text(path));
    for (const auto& r : doc.at("rounds")) reg.rounds_.push_back(round_from_json(r));
  }
  return reg;
}

const ValidationRound* RoundRegistry::find(int number) const {
  for (const auto& r : rounds_) {
    if (r.number == number) return &r;
  }
  return nullptr;
}

const ValidationRound& RoundRegistry::open_round(const std::vector<AnnotationRecord>& machine, std::size_t size,
                                                 std::uint64_t seed, std::string criteria_version, std::string note) {
  std::set<std::string> used;
  for (const auto& r : rounds_) {
    if (!r.closed) throw ValidationError(fmt::format("round {} is still open", r.number));
    used.insert(r.items.begin(), r.items.end());
  }
  ValidationRound r;
  r.number = static_cast<int>(rounds_.size()) + 1;
  r.items = sample_validation_items(machine, size, seed, used);
  if (r.items.empty()) throw ValidationError("no machine-labeled reviews left to sample");
  r.seed = seed;
  r.criteria_version = std::move(criteria_version);
  r.note = std::move(note);
  rounds_.push_back(std::move(r));
  save();
  return rounds_.back();
}

const ValidationRound& RoundRegistry::close_round(int number) {
  for (auto& r : rounds_) {
    if (r.number == number) {
      r.closed = true;
      save();
      return r;
    }
  }
  throw ValidationError(fmt::format("unknown round {}", number));
}

void RoundRegistry::save() const {
  json rounds = json::array();
  for (const auto& r : rounds_) rounds.push_back(to_json(r));
  jsonl::write_text_atomic(path_, json{{"rounds", rounds}}.dump(2) + "\n");
}

}  // namespace reviewguard::annotate
