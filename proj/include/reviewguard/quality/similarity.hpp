#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/llmio/client.hpp"

namespace reviewguard::quality {

struct Cosine {
  double value = 0.0;
  bool clamped = false;
};

// Fails (nullopt) on a zero-norm vector; throws ValidationError on a
// dimension mismatch. Values within 1e-9 outside [-1, 1] are clamped.
std::optional<Cosine> cosine(const std::vector<double>& u, const std::vector<double>& v);

inline constexpr double kBinWidth = 0.02;
inline constexpr std::size_t kBins = 100;

struct Histogram {
  std::vector<std::int64_t> counts = std::vector<std::int64_t>(kBins, 0);
  double peak_center = 0.0;
  bool peak_tie = false;

  static double center(std::size_t bin) { return -1.0 + kBinWidth * (static_cast<double>(bin) + 0.5); }
  static std::size_t bin_of(double c);
};

Histogram histogram(const std::vector<double>& values);

struct SimilarityPair {
  std::string id;
  std::string group;  // e.g. "real/SR/ICLR"
  std::string abstract;
  std::string review;
};

struct SimilarityStats {
  std::string group;
  std::vector<std::pair<std::string, double>> cosines;  // (id, value)
  std::vector<std::string> failures;  // ids with a zero-norm vector
  std::size_t clamped = 0;
  Histogram histogram;
};

// Groups sorted by label; pairs within a group keep input order.
std::vector<SimilarityStats> similarity_distribution(const std::vector<SimilarityPair>& pairs, llmio::Client& client);
// Same, from precomputed vectors (abstract, review) per pair.
std::vector<SimilarityStats> similarity_from_vectors(
    const std::vector<SimilarityPair>& pairs,
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& vectors);

nlohmann::json to_json(const SimilarityStats& s);
std::string histogram_csv(const std::vector<SimilarityStats>& stats);

}  // namespace reviewguard::quality
