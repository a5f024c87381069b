#include "ked/specfun.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "ked/error.hpp"

namespace ked::specfun {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;  // 1/sqrt(pi)
constexpr double kSqrt2 = std::numbers::sqrt2;

// Continued fraction exp(x^2) erfc(x) = (1/sqrt(pi)) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
// evaluated bottom-up. Used for x >= 3 only, where 120 levels are plenty.
double erfcx_continued_fraction(double x) {
  double tail = x;
  for (int k = 120; k >= 1; --k) tail = x + 0.5 * k / tail;
  return kInvSqrtPi / tail;
}

struct Rational {
  long long num;
  long long den;
};

// Coefficients of B_n(t) in decreasing powers of t, n = 2, 4, ..., 12.
constexpr std::array<std::array<Rational, 13>, 6> kBernoulliCoefficients{{
    {{{1, 1}, {-1, 1}, {1, 6}}},
    {{{1, 1}, {-2, 1}, {1, 1}, {0, 1}, {-1, 30}}},
    {{{1, 1}, {-3, 1}, {5, 2}, {0, 1}, {-1, 2}, {0, 1}, {1, 42}}},
    {{{1, 1}, {-4, 1}, {14, 3}, {0, 1}, {-7, 3}, {0, 1}, {2, 3}, {0, 1}, {-1, 30}}},
    {{{1, 1}, {-5, 1}, {15, 2}, {0, 1}, {-7, 1}, {0, 1}, {5, 1}, {0, 1}, {-3, 2}, {0, 1}, {5, 66}}},
    {{{1, 1},
      {-6, 1},
      {11, 1},
      {0, 1},
      {-33, 2},
      {0, 1},
      {22, 1},
      {0, 1},
      {-33, 2},
      {0, 1},
      {5, 1},
      {0, 1},
      {-691, 2730}}},
}};

}  // namespace

double erf(double x) { return std::erf(x); }

double erfc(double x) { return std::erfc(x); }

double erfcx(double x) {
  if (x < 0.0) {
    // erfc(-y) = 2 - erfc(y)
    return 2.0 * std::exp(x * x) - erfcx(-x);
  }
  if (x < 3.0) return std::exp(x * x) * std::erfc(x);
  return erfcx_continued_fraction(x);
}

double normal_cdf(double x) {
  if (x <= -8.0) return 0.5 * erfcx(-x / kSqrt2) * std::exp(-0.5 * x * x);
  return 0.5 * std::erfc(-x / kSqrt2);
}

double log_normal_cdf(double x) {
  if (x <= -8.0) return std::log(0.5 * erfcx(-x / kSqrt2)) - 0.5 * x * x;
  if (x > 0.0) return std::log1p(-normal_cdf(-x));
  return std::log(normal_cdf(x));
}

double exp_times_normal_cdf(double a, double b) {
  if (a <= 40.0 && b > -8.0) return std::exp(a) * normal_cdf(b);
  if (b >= 0.0) return std::exp(a) * normal_cdf(b);
  return 0.5 * erfcx(-b / kSqrt2) * std::exp(a - 0.5 * b * b);
}

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation, then one Halley step against normal_cdf.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    // Residual in whichever tail keeps precision.
    const double e = (x < 0.0) ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double factorial(int n) {
  require(n >= 0, "factorial: negative argument");
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double lower_incomplete_gamma_int(int m, double x) {
  require(m >= 0, "lower_incomplete_gamma_int: m must be >= 0");
  require(x >= 0.0, "lower_incomplete_gamma_int: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x < m + 1.0) {
    // x^{m+1} e^{-x} sum_k x^k / ((m+1)(m+2)...(m+1+k)); all terms positive.
    double term = 1.0 / (m + 1.0);
    double sum = term;
    for (int k = 1; k < 500; ++k) {
      term *= x / (m + 1.0 + k);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return std::exp((m + 1.0) * std::log(x) - x) * sum;
  }
  double partial = 1.0;
  double term = 1.0;
  for (int i = 1; i <= m; ++i) {
    term *= x / i;
    partial += term;
  }
  return factorial(m) * (1.0 - std::exp(-x) * partial);
}

double bernoulli_poly(int degree, double t) {
  require(degree >= 2 && degree <= 12 && degree % 2 == 0,
          "bernoulli_poly: degree must be even and within [2, 12]");
  const auto& coeffs = kBernoulliCoefficients[degree / 2 - 1];
  double acc = 0.0;
  for (int k = 0; k <= degree; ++k) {
    acc = acc * t + static_cast<double>(coeffs[k].num) / static_cast<double>(coeffs[k].den);
  }
  return acc;
}

std::int64_t double_factorial(int n) {
  require(n >= -1 && (n % 2 != 0), "double_factorial: argument must be odd and >= -1");
  std::int64_t acc = 1;
  for (int k = n; k > 1; k -= 2) acc *= k;
  return acc;
}

}  // namespace ked::specfun
