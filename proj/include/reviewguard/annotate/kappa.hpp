#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "reviewguard/error.hpp"

namespace reviewguard::annotate {

// Cohen's kappa for two raters over the same items.
//
// kappa = (p_o - p_e) / (1 - p_e), with p_e the sum over labels of the
// product of the two raters' marginal proportions. When both raters used one
// single label throughout, p_e = p_o = 1 and the result is defined as 1.
template <typename Label>
double cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
  if (a.size() != b.size()) throw ValidationError("cohen_kappa: length mismatch");
  if (a.empty()) throw ValidationError("cohen_kappa: empty sequences");
  const double n = static_cast<double>(a.size());
  std::map<Label, double> ma;
  std::map<Label, double> mb;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma[a[i]] += 1.0;
    mb[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, count] : ma) {
    auto it = mb.find(label);
    if (it != mb.end()) p_e += (count / n) * (it->second / n);
  }
  if (std::fabs(1.0 - p_e) < 1e-15) return 1.0;
  return std::clamp((p_o - p_e) / (1.0 - p_e), -1.0, 1.0);
}

// Fleiss' kappa over an items x categories matrix of rater counts; every row
// must sum to `raters` (m >= 2).
//
// P_i = (sum_j n_ij^2 - m) / (m (m - 1)),  P = mean_i P_i,
// p_j = sum_i n_ij / (N m),                 P_e = sum_j p_j^2,
// kappa = (P - P_e) / (1 - P_e); defined as 1 when P_e = 1.
inline double fleiss_kappa(const std::vector<std::vector<int>>& counts, int raters) {
  if (raters < 2) throw ValidationError("fleiss_kappa: need at least 2 raters");
  if (counts.empty()) throw ValidationError("fleiss_kappa: no items");
  const std::size_t k = counts.front().size();
  const double m = raters;
  std::vector<double> column(k, 0.0);
  double p_bar = 0.0;
  for (const auto& row : counts) {
    if (row.size() != k) throw ValidationError("fleiss_kappa: ragged matrix");
    int sum = 0;
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (row[j] < 0) throw ValidationError("fleiss_kappa: negative count");
      sum += row[j];
      sq += static_cast<double>(row[j]) * row[j];
      column[j] += row[j];
    }
    if (sum != raters) throw ValidationError("fleiss_kappa: inconsistent row sums");
    p_bar += (sq - m) / (m * (m - 1.0));
  }
  const double n_items = static_cast<double>(counts.size());
  p_bar /= n_items;
  double p_e = 0.0;
  for (double c : column) {
    const double p = c / (n_items * m);
    p_e += p * p;
  }
  if (std::fabs(1.0 - p_e) < 1e-15) return 1.0;
  return std::clamp((p_bar - p_e) / (1.0 - p_e), -1.0, 1.0);
}

}  // namespace reviewguard::annotate
