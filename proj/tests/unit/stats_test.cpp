#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reviewguard/error.hpp"
#include "reviewguard/stats/chi_square.hpp"
#include "reviewguard/stats/correlation.hpp"
#include "reviewguard/stats/special_functions.hpp"

namespace rs = reviewguard::stats;
namespace oracle = rgtest::oracle;

TEST(IncompleteGamma, MatchesQuadrature) {
  for (double a : {0.5, 1.0, 1.5, 3.0, 7.5}) {
    for (double x : {0.05, 0.5, 1.0, 2.5, 6.0, 12.0}) {
      const double expected = oracle::gamma_p(a, x);
      EXPECT_NEAR(rs::regularized_gamma_p(a, x), expected, 1e-10) << "a=" << a << " x=" << x;
      EXPECT_NEAR(rs::regularized_gamma_q(a, x), 1.0 - expected, 1e-10) << "a=" << a << " x=" << x;
    }
  }
}

TEST(IncompleteGamma, EdgeValues) {
  EXPECT_EQ(rs::regularized_gamma_p(2.0, 0.0), 0.0);
  EXPECT_EQ(rs::regularized_gamma_q(2.0, 0.0), 1.0);
  // Q(1, x) = exp(-x) exactly.
  EXPECT_NEAR(rs::regularized_gamma_q(1.0, 3.0), std::exp(-3.0), 1e-15);
  EXPECT_THROW(rs::regularized_gamma_p(0.0, 1.0), reviewguard::ValidationError);
}

TEST(IncompleteBeta, MatchesQuadrature) {
  for (auto [a, b] : std::vector<std::pair<double, double>>{{1, 1}, {2, 3}, {5, 2}, {10, 10}, {3, 4}}) {
    for (double x : {0.01, 0.2, 0.5, 0.77, 0.99}) {
      EXPECT_NEAR(rs::regularized_beta(a, b, x), oracle::beta_cdf(a, b, x), 1e-10)
          << "a=" << a << " b=" << b << " x=" << x;
    }
  }
  EXPECT_EQ(rs::regularized_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(rs::regularized_beta(2, 3, 1.0), 1.0);
}

TEST(StudentT, TailMatchesQuadratureForSampleSizes) {
  for (int n : {5, 30, 200}) {
    const double df = n - 2;
    for (double t : {0.1, 0.8, 1.96, 3.5, 6.0}) {
      EXPECT_NEAR(rs::student_t_two_sided_p(t, df), oracle::student_t_two_sided(t, df), 1e-8)
          << "n=" << n << " t=" << t;
      EXPECT_DOUBLE_EQ(rs::student_t_two_sided_p(-t, df), rs::student_t_two_sided_p(t, df));
    }
  }
  EXPECT_DOUBLE_EQ(rs::student_t_two_sided_p(0.0, 10), 1.0);
}

TEST(ChiSquareTail, MatchesQuadratureForTwoDegreesOfFreedom) {
  for (double x : {0.1, 5.99, 30.0}) {
    EXPECT_NEAR(rs::chi_square_upper_p(x, 2), oracle::chi_square_tail(x, 2), 1e-8) << x;
  }
  for (double df : {1.0, 3.0, 6.0}) {
    for (double x : {0.5, 4.0, 15.0}) {
      EXPECT_NEAR(rs::chi_square_upper_p(x, df), oracle::chi_square_tail(x, df), 1e-8) << df << " " << x;
    }
  }
}

TEST(ChiSquare, StatisticMatchesDirectFormula) {
  const rs::CountTable t{{10, 80, 10}, {30, 50, 20}};
  auto r = rs::chi_square(t);
  EXPECT_NEAR(r.statistic, oracle::chi_square_statistic({{10, 80, 10}, {30, 50, 20}}), 1e-9);
  EXPECT_EQ(r.df, 2);
  EXPECT_NEAR(r.p_value, std::exp(-r.statistic / 2), 1e-12);
}

TEST(ChiSquare, ObservedEqualToExpectedGivesZero) {
  // Rows proportional to each other: O equals its own expected table.
  auto r = rs::chi_square({{10, 20, 30}, {20, 40, 60}});
  EXPECT_NEAR(r.statistic, 0.0, 1e-12);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
}

TEST(ChiSquare, RowSwapInvarianceAndMonotonePValue) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    rs::CountTable t(2, std::vector<std::int64_t>(3));
    for (auto& row : t) {
      for (auto& c : row) c = 1 + static_cast<std::int64_t>(rng() % 60);
    }
    auto swapped = rs::CountTable{t[1], t[0]};
    EXPECT_NEAR(rs::chi_square(t).statistic, rs::chi_square(swapped).statistic, 1e-9);
  }
  double prev = 1.1;
  for (double x = 0.0; x < 40; x += 0.5) {
    const double p = rs::chi_square_upper_p(x, 2);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(ChiSquare, DegenerateTablesRejected) {
  EXPECT_THROW(rs::chi_square({{0, 0, 0}, {1, 2, 3}}), reviewguard::ValidationError);
  EXPECT_THROW(rs::chi_square({{1, 0}, {2, 0}}), reviewguard::ValidationError);
  EXPECT_THROW(rs::chi_square({{1, 2, 3}}), reviewguard::ValidationError);
}

TEST(Spearman, MonotoneFixtures) {
  std::vector<double> x{1, 2, 3};
  EXPECT_DOUBLE_EQ(rs::spearman(x, std::vector<double>{10, 20, 30}).rho, 1.0);
  EXPECT_DOUBLE_EQ(rs::spearman(x, std::vector<double>{3, 2, 1}).rho, -1.0);
}

TEST(Spearman, TieFixtureMatchesRankThenPearson) {
  std::vector<double> x{1, 2, 2, 4};
  std::vector<double> y{1, 3, 2, 4};
  EXPECT_NEAR(rs::spearman(x, y).rho, oracle::spearman(x, y), 1e-12);
}

TEST(Spearman, AverageRanksMatchPairwiseCount) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 30);
    for (auto& e : v) e = static_cast<double>(rng() % 8);
    auto got = rs::average_ranks(v);
    auto want = oracle::ranks(v);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(got[i], want[i]);
  }
}

TEST(Spearman, RandomVectorsWithTiesMatchOracle) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  while (checked < 1000) {
    const std::size_t n = 3 + rng() % 48;
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % 12);
      y[i] = static_cast<double>(rng() % 12);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
      continue;
    }
    EXPECT_NEAR(rs::spearman(x, y).rho, oracle::spearman(x, y), 1e-12);
    ++checked;
  }
}

TEST(Spearman, InvariantUnderIncreasingTransforms) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng() % 40;
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 1.0 + static_cast<double>(rng() % 20);
      y[i] = 1.0 + static_cast<double>(rng() % 20);
    }
    const double base = rs::spearman(x, y).rho;
    std::vector<double> x2(n);
    std::vector<double> y3(n);
    for (std::size_t i = 0; i < n; ++i) {
      x2[i] = 2 * x[i] + 7;
      y3[i] = y[i] * y[i] * y[i];
    }
    EXPECT_NEAR(rs::spearman(x2, y).rho, base, 1e-12);
    EXPECT_NEAR(rs::spearman(x, y3).rho, base, 1e-12);
  }
}

TEST(Spearman, PValueUsesStudentT) {
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> y{2, 1, 4, 3, 6, 5, 8, 7};
  auto r = rs::spearman(x, y);
  const double t = r.rho * std::sqrt((8 - 2) / (1 - r.rho * r.rho));
  EXPECT_NEAR(r.p_value, oracle::student_t_two_sided(t, 6), 1e-10);
  EXPECT_EQ(r.n, 8u);
}

TEST(Spearman, RejectsBadInput) {
  std::vector<double> a{1, 2};
  EXPECT_THROW(rs::spearman(a, a), reviewguard::ValidationError);
  std::vector<double> c{1, 1, 1};
  std::vector<double> d{1, 2, 3};
  EXPECT_THROW(rs::spearman(c, d), reviewguard::ValidationError);
  std::vector<double> e{1, 2, 3, 4};
  EXPECT_THROW(rs::spearman(d, e), reviewguard::ValidationError);
}

TEST(Descriptive, MeanAndSampleSd) {
  std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(rs::mean(v), 5.0);
  EXPECT_NEAR(rs::sample_sd(v), std::sqrt(32.0 / 7.0), 1e-12);
  std::vector<double> one{3};
  EXPECT_EQ(rs::sample_sd(one), 0.0);
}
