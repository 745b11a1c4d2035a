#pragma once

// Reference computations used as test oracles. Each is written from the
// textbook definition, independently of the library code it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace rgtest::oracle {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const double tol = std::max(eps, 1e-16 * std::fabs(left + right));
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b, double eps = 1e-13) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, eps, 40);
}

// P(a, x) with t = u^2, which turns t^(a-1) e^-t dt into 2 u^(2a-1) e^(-u^2) du.
// Smooth whenever 2a - 1 is a non-negative integer, so keep a a half-integer.
inline double gamma_p(double a, double x) {
  if (x <= 0) return 0.0;
  auto f = [a](double u) { return u == 0.0 ? (a == 0.5 ? 2.0 : 0.0) : 2.0 * std::pow(u, 2 * a - 1) * std::exp(-u * u); };
  return integrate(f, 0.0, std::sqrt(x)) / std::tgamma(a);
}

// Upper chi-square tail Q(df/2, x/2), integrated outward from sqrt(x/2) with
// the same substitution; df must be a positive integer.
inline double chi_square_tail(double x, double df) {
  const double a = df / 2.0;
  auto f = [a](double u) { return 2.0 * std::pow(u, 2 * a - 1) * std::exp(-u * u); };
  double total = 0.0;
  double lo = std::sqrt(x / 2.0);
  for (int i = 0; i < 20; ++i) {
    total += integrate(f, lo, lo + 1.0, 1e-16);
    lo += 1.0;
  }
  return total / std::tgamma(a);
}

// Two-sided Student t tail: 1 - 2 int_0^|t| f(s) ds.
inline double student_t_two_sided(double t, double df) {
  const double log_c = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) - 0.5 * std::log(df * M_PI);
  auto density = [&](double s) { return std::exp(log_c - (df + 1.0) / 2.0 * std::log1p(s * s / df)); };
  return 1.0 - 2.0 * integrate(density, 0.0, std::fabs(t), 1e-15);
}

// I_x(a, b) for a, b >= 1 by direct integration of the beta density.
inline double beta_cdf(double a, double b, double x) {
  const double log_b = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto density = [&](double t) {
    if (t <= 0 || t >= 1) return (t <= 0 && a == 1.0) || (t >= 1 && b == 1.0) ? std::exp(-log_b) : 0.0;
    return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) - log_b);
  };
  return integrate(density, 0.0, x, 1e-15);
}

// Rank of v[i] = 1 + #smaller + (#equal - 1) / 2, counted pairwise.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double smaller = 0;
    double equal = 0;
    for (double w : v) {
      if (w < v[i]) smaller += 1;
      if (w == v[i]) equal += 1;
    }
    r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0;
  long double my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0;
  long double sxx = 0;
  long double syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) { return pearson(ranks(x), ranks(y)); }

struct Consensus {
  double consensus = 0;
  double diff_high = 0;
  double diff_low = 0;
  bool conflicting = false;
};

// Sort, drop one max and one min, average the rest.
inline Consensus consensus(std::vector<long long> scores, double theta) {
  std::sort(scores.begin(), scores.end());
  double sum = 0;
  for (std::size_t i = 1; i + 1 < scores.size(); ++i) sum += static_cast<double>(scores[i]);
  Consensus c;
  c.consensus = sum / static_cast<double>(scores.size() - 2);
  c.diff_high = static_cast<double>(scores.back()) - c.consensus;
  c.diff_low = c.consensus - static_cast<double>(scores.front());
  c.conflicting = c.diff_high >= theta || c.diff_low >= theta;
  return c;
}

// Cohen's kappa from a square confusion matrix (rows rater A, columns rater B).
inline double cohen_from_confusion(const std::vector<std::vector<double>>& m) {
  double n = 0;
  double diag = 0;
  std::vector<double> rows(m.size(), 0.0);
  std::vector<double> cols(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      n += m[i][j];
      rows[i] += m[i][j];
      cols[j] += m[i][j];
      if (i == j) diag += m[i][j];
    }
  }
  const double po = diag / n;
  double pe = 0;
  for (std::size_t i = 0; i < m.size(); ++i) pe += rows[i] * cols[i] / (n * n);
  return (po - pe) / (1 - pe);
}

// Fleiss' kappa computed the long way: per-item agreement from rater pairs,
// category shares from raw tallies.
inline double fleiss_stepwise(const std::vector<std::vector<int>>& counts, int m) {
  const std::size_t n = counts.size();
  const std::size_t k = counts.front().size();
  std::vector<double> p_items;
  for (const auto& row : counts) {
    double agreeing_pairs = 0;
    for (int c : row) agreeing_pairs += c * (c - 1) / 2.0;
    p_items.push_back(agreeing_pairs / (m * (m - 1) / 2.0));
  }
  double p_bar = 0;
  for (double p : p_items) p_bar += p;
  p_bar /= static_cast<double>(n);
  double pe = 0;
  for (std::size_t j = 0; j < k; ++j) {
    double tally = 0;
    for (const auto& row : counts) tally += row[j];
    const double pj = tally / (static_cast<double>(n) * m);
    pe += pj * pj;
  }
  return (p_bar - pe) / (1 - pe);
}

// Longest run of equal consecutive tokens, by trying every start pair.
inline std::size_t common_span(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      std::size_t len = 0;
      while (i + len < a.size() && j + len < b.size() && a[i + len] == b[j + len]) ++len;
      best = std::max(best, len);
    }
  }
  return best;
}

// Pearson chi-square statistic straight from the formula.
inline double chi_square_statistic(const std::vector<std::vector<double>>& o) {
  double total = 0;
  std::vector<double> rows(o.size(), 0.0);
  std::vector<double> cols(o.front().size(), 0.0);
  for (std::size_t i = 0; i < o.size(); ++i) {
    for (std::size_t j = 0; j < o[i].size(); ++j) {
      rows[i] += o[i][j];
      cols[j] += o[i][j];
      total += o[i][j];
    }
  }
  double stat = 0;
  for (std::size_t i = 0; i < o.size(); ++i) {
    for (std::size_t j = 0; j < o[i].size(); ++j) {
      const double e = rows[i] * cols[j] / total;
      stat += (o[i][j] - e) * (o[i][j] - e) / e;
    }
  }
  return stat;
}

struct Prf {
  double p = 0;
  double r = 0;
  double f1 = 0;
};

// Precision/recall/F1 of one label from gold and predicted 0/1 vectors, 0/0 -> 0.
inline Prf label_prf(const std::vector<int>& gold, const std::vector<int>& pred) {
  double tp = 0;
  double fp = 0;
  double fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] && pred[i]) tp += 1;
    if (!gold[i] && pred[i]) fp += 1;
    if (gold[i] && !pred[i]) fn += 1;
  }
  Prf out;
  out.p = tp + fp > 0 ? tp / (tp + fp) : 0;
  out.r = tp + fn > 0 ? tp / (tp + fn) : 0;
  out.f1 = out.p + out.r > 0 ? 2 * out.p * out.r / (out.p + out.r) : 0;
  return out;
}

}  // namespace rgtest::oracle
