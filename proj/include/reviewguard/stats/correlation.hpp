#pragma once

#include <span>
#include <string>
#include <vector>

namespace reviewguard::stats {

struct CorrelationResult {
  std::string metric;
  double rho = 0.0;
  double p_value = 1.0;  // two-sided
  std::size_t n = 0;
};

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

// Spearman's rho as the Pearson correlation of average ranks, with a two-sided
// p-value from t = rho * sqrt((n - 2) / (1 - rho^2)) on n - 2 degrees of
// freedom. Requires equal lengths, n >= 3 and non-constant inputs.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           std::string metric = {});

double mean(std::span<const double> values);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> values);

}  // namespace reviewguard::stats
