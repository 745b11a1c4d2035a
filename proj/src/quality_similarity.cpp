#include <cmath>
#include <map>

#include <fmt/format.h>

#include "reviewguard/error.hpp"
#include "reviewguard/quality/similarity.hpp"

namespace reviewguard::quality {

using nlohmann::json;

std::optional<Cosine> cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) {
    throw ValidationError(fmt::format("embedding dimension mismatch ({} vs {})", u.size(), v.size()));
  }
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0 || !std::isfinite(nu) || !std::isfinite(nv)) return std::nullopt;
  Cosine c{dot / (std::sqrt(nu) * std::sqrt(nv)), false};
  if (c.value > 1.0 || c.value < -1.0) {
    if (std::fabs(c.value) > 1.0 + 1e-9) throw ValidationError("cosine outside [-1, 1] beyond rounding");
    c.value = std::clamp(c.value, -1.0, 1.0);
    c.clamped = true;
  }
  return c;
}

std::size_t Histogram::bin_of(double c) {
  const auto b = static_cast<std::int64_t>(std::floor((c + 1.0) / kBinWidth));
  return static_cast<std::size_t>(std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(kBins) - 1));
}

Histogram histogram(const std::vector<double>& values) {
  Histogram h;
  for (double v : values) ++h.counts[Histogram::bin_of(v)];
  std::size_t best = 0;
  for (std::size_t i = 1; i < kBins; ++i) {
    if (h.counts[i] > h.counts[best]) best = i;
  }
  h.peak_center = Histogram::center(best);
  for (std::size_t i = best + 1; i < kBins; ++i) {
    if (h.counts[i] == h.counts[best]) h.peak_tie = true;
  }
  return h;
}

std::vector<SimilarityStats> similarity_from_vectors(
    const std::vector<SimilarityPair>& pairs,
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& vectors) {
  if (pairs.size() != vectors.size()) throw ValidationError("one vector pair per similarity pair expected");
  std::optional<std::size_t> dim;
  std::map<std::string, SimilarityStats> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (const auto* v : {&vectors[i].first, &vectors[i].second}) {
      if (!dim) dim = v->size();
      if (v->size() != *dim) {
        throw ValidationError(fmt::format("embedding dimension changed within the run ({} vs {})", v->size(), *dim));
      }
    }
    auto& g = groups[pairs[i].group];
    g.group = pairs[i].group;
    auto c = cosine(vectors[i].first, vectors[i].second);
    if (!c) {
      g.failures.push_back(pairs[i].id);
      continue;
    }
    g.clamped += c->clamped ? 1 : 0;
    g.cosines.emplace_back(pairs[i].id, c->value);
  }
  std::vector<SimilarityStats> out;
  for (auto& [name, g] : groups) {
    std::vector<double> values;
    for (const auto& [id, v] : g.cosines) values.push_back(v);
    g.histogram = histogram(values);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<SimilarityStats> similarity_distribution(const std::vector<SimilarityPair>& pairs, llmio::Client& client) {
  std::vector<std::string> texts;
  texts.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    texts.push_back(p.abstract);
    texts.push_back(p.review);
  }
  const auto vecs = client.embed(texts);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> vectors;
  for (std::size_t i = 0; i < pairs.size(); ++i) vectors.emplace_back(vecs[2 * i], vecs[2 * i + 1]);
  return similarity_from_vectors(pairs, vectors);
}

json to_json(const SimilarityStats& s) {
  json cos = json::array();
  for (const auto& [id, v] : s.cosines) cos.push_back({{"id", id}, {"cosine", v}});
  return json{{"group", s.group},
              {"n", s.cosines.size()},
              {"cosines", cos},
              {"failures", s.failures},
              {"clamped", s.clamped},
              {"bin_width", kBinWidth},
              {"histogram", s.histogram.counts},
              {"peak_bin_center", s.histogram.peak_center},
              {"peak_tie", s.histogram.peak_tie}};
}

std::string histogram_csv(const std::vector<SimilarityStats>& stats) {
  std::string out = "group,bin_center,count\n";
  for (const auto& s : stats) {
    for (std::size_t i = 0; i < kBins; ++i) {
      out += fmt::format("{},{:.2f},{}\n", s.group, Histogram::center(i), s.histogram.counts[i]);
    }
  }
  return out;
}

}  // namespace reviewguard::quality
