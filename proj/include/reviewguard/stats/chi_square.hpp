#pragma once

#include <cstdint>
#include <vector>

namespace reviewguard::stats {

using CountTable = std::vector<std::vector<std::int64_t>>;

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  CountTable observed;
  std::vector<std::vector<double>> expected;
};

// Pearson's chi-square test of independence on an r x c contingency table.
// Expected counts come from the row and column marginals; every marginal must
// be positive ("degenerate table" otherwise).
ChiSquareResult chi_square(const CountTable& observed);

}  // namespace reviewguard::stats
