#pragma once

namespace reviewguard::stats {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
//
// Switch point: the power series is used for x < a + 1, where it converges
// quickly; otherwise Q is evaluated with a modified-Lentz continued fraction
// and P = 1 - Q. Both stop at a relative increment below 1e-15.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Regularized incomplete beta I_x(a, b).
//
// Switch point: the continued fraction is evaluated directly for
// x < (a + 1) / (a + b + 2) and through the symmetry
// I_x(a, b) = 1 - I_{1-x}(b, a) otherwise.
double regularized_beta(double a, double b, double x);

// Two-sided tail probability of Student's t with `df` degrees of freedom:
// P(|T| >= |t|) = I_{df / (df + t^2)}(df / 2, 1 / 2).
double student_t_two_sided_p(double t, double df);

// Upper tail of the chi-square distribution: Q(df / 2, x / 2).
double chi_square_upper_p(double statistic, double df);

}  // namespace reviewguard::stats
