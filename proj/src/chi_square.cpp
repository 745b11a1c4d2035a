#include "reviewguard/stats/chi_square.hpp"

#include <algorithm>

#include "reviewguard/error.hpp"
#include "reviewguard/stats/special_functions.hpp"

namespace reviewguard::stats {

ChiSquareResult chi_square(const CountTable& observed) {
  const std::size_t rows = observed.size();
  if (rows < 2) throw ValidationError("chi-square needs at least 2 rows");
  const std::size_t cols = observed.front().size();
  if (cols < 2) throw ValidationError("chi-square needs at least 2 columns");

  std::vector<double> row_sum(rows, 0.0);
  std::vector<double> col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (observed[i].size() != cols) throw ValidationError("chi-square table is not rectangular");
    for (std::size_t j = 0; j < cols; ++j) {
      if (observed[i][j] < 0) throw ValidationError("chi-square counts must be non-negative");
      const auto v = static_cast<double>(observed[i][j]);
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  }
  const auto zero = [](double v) { return v <= 0.0; };
  if (std::any_of(row_sum.begin(), row_sum.end(), zero) ||
      std::any_of(col_sum.begin(), col_sum.end(), zero)) {
    throw ValidationError("degenerate table: a row or column sums to zero");
  }

  ChiSquareResult out;
  out.observed = observed;
  out.expected.assign(rows, std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = row_sum[i] * col_sum[j] / total;
      out.expected[i][j] = e;
      const double d = static_cast<double>(observed[i][j]) - e;
      out.statistic += d * d / e;
    }
  }
  out.df = static_cast<int>((rows - 1) * (cols - 1));
  out.p_value = std::clamp(chi_square_upper_p(out.statistic, out.df), 0.0, 1.0);
  return out;
}

}  // namespace reviewguard::stats
