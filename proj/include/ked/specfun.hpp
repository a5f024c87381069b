#pragma once

#include <cstdint>

namespace ked::specfun {

double erf(double x);
double erfc(double x);

/// Scaled complementary error function exp(x^2) erfc(x). Finite for all
/// finite x >= -26; decays like 1/(x sqrt(pi)) for large x.
double erfcx(double x);

/// Standard normal CDF. The lower tail goes through erfc so that values
/// down to x = -37 keep full relative precision.
double normal_cdf(double x);

/// log of the standard normal CDF, accurate far into the lower tail.
double log_normal_cdf(double x);

/// exp(a) * Phi(b) without intermediate overflow/underflow. Switches to the
/// erfcx form when a exceeds 40 or b is deep in the lower tail.
double exp_times_normal_cdf(double a, double b);

/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

/// gamma(m+1, x) = int_0^x t^m e^{-t} dt = m! (1 - e^{-x} sum_{i<=m} x^i/i!).
double lower_incomplete_gamma_int(int m, double x);

/// Bernoulli polynomial B_degree(t), degree even in [2, 12].
double bernoulli_poly(int degree, double t);

/// n!! for odd n >= -1; (-1)!! = 1.
std::int64_t double_factorial(int n);

double factorial(int n);

}  // namespace ked::specfun
