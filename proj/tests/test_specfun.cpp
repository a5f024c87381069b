#include <numbers>

#include "ked/rules.hpp"
#include "ked/specfun.hpp"
#include "support.hpp"

using namespace ked;

TEST_SUITE("specfun") {
  TEST_CASE("erf at the origin, saturation and an interior reference") {
    CHECK(specfun::erf(0.0) == 0.0);
    CHECK_CLOSE(specfun::erf(10.0), 1.0, 1e-15);
    CHECK_REL(specfun::erf(0.5), 0.52049987781304653768, 4e-16);
    CHECK(specfun::erf(-0.5) == -specfun::erf(0.5));
  }

  TEST_CASE("normal cdf symmetry and tails") {
    CHECK(specfun::normal_cdf(0.0) == 0.5);
    for (double x = 0.0; x <= 8.0; x += 0.37) {
      CHECK_CLOSE(specfun::normal_cdf(x) + specfun::normal_cdf(-x), 1.0, 1e-15);
    }
    CHECK_REL(specfun::normal_cdf(0.3), 0.61791142218895263307, 1e-15);
    CHECK_REL(specfun::normal_cdf(-10.0), 7.619853024160526066e-24, 1e-14);
    CHECK_REL(specfun::normal_cdf(-37.0), 5.7255712225245768227e-300, 1e-12);
  }

  TEST_CASE("log normal cdf deep in the lower tail") {
    CHECK_REL(specfun::log_normal_cdf(-37.0), -689.0305855768905936, 1e-14);
    CHECK_REL(specfun::log_normal_cdf(-200.0), -20006.217280898190402, 1e-14);
    CHECK_REL(specfun::log_normal_cdf(0.3), std::log(0.61791142218895263307), 1e-14);
  }

  TEST_CASE("exp times normal cdf without overflow") {
    CHECK_REL(specfun::exp_times_normal_cdf(3.0, -1.5), 1.3418585078204786913, 1e-14);
    CHECK_REL(specfun::exp_times_normal_cdf(800.0, -40.0), 0.0099673351883013099835, 1e-12);
    CHECK_REL(specfun::exp_times_normal_cdf(-700.0, 38.0), 9.8596765437597708567e-305, 1e-12);
  }

  TEST_CASE("normal quantile inverts the cdf") {
    CHECK_REL(specfun::normal_quantile(0.975), 1.9599639845400542355, 1e-14);
    // above x = 5 the cdf rounds towards 1 and stops carrying x
    for (double x = -30.0; x <= 5.0; x += 0.71) {
      CHECK_CLOSE(specfun::normal_quantile(specfun::normal_cdf(x)), x, 1e-9 * std::max(1.0, std::abs(x)));
    }
    CHECK_THROWS(specfun::normal_quantile(0.0));
    CHECK_THROWS(specfun::normal_quantile(1.0));
  }

  TEST_CASE("lower incomplete gamma for integer order") {
    for (double x : {0.1, 1.0, 3.7}) CHECK_REL(specfun::lower_incomplete_gamma_int(0, x), -std::expm1(-x), 1e-15);
    for (int m = 0; m < 5; ++m) CHECK(specfun::lower_incomplete_gamma_int(m, 0.0) == 0.0);
    CHECK_REL(specfun::lower_incomplete_gamma_int(2, 2.5), 0.912373768233340964, 1e-14);
    CHECK_REL(specfun::lower_incomplete_gamma_int(3, 2.5), 1.4545432012016042175, 1e-14);
    // small-x accuracy: gamma(4, x) ~ x^4 / 4
    CHECK_REL(specfun::lower_incomplete_gamma_int(3, 1e-5), 1e-20 / 4.0 * (1.0 - 4.0 / 5.0 * 1e-5), 1e-9);
  }

  TEST_CASE("bernoulli polynomials") {
    CHECK_REL(specfun::bernoulli_poly(2, 0.0), 1.0 / 6.0, 1e-15);
    CHECK_REL(specfun::bernoulli_poly(4, 0.5), 7.0 / 240.0, 1e-14);
    CHECK_REL(specfun::bernoulli_poly(6, 0.3), -0.0075014761904761904762, 1e-13);
    // Fourier series of B_4 truncated at 10^6 terms.
    double series = 0.0;
    for (long k = 1000000; k >= 1; --k) {
      const double kd = static_cast<double>(k);
      series += std::cos(2.0 * std::numbers::pi * kd * 0.5) / (kd * kd * kd * kd);
    }
    const double fourier = -2.0 * 24.0 / std::pow(2.0 * std::numbers::pi, 4) * series;
    CHECK_CLOSE(specfun::bernoulli_poly(4, 0.5), fourier, 1e-10);
  }

  TEST_CASE("bernoulli polynomials integrate to zero over the unit interval") {
    const auto rule = gauss_legendre(20, 0.0, 1.0);
    for (int deg = 2; deg <= 12; deg += 2) {
      double acc = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * specfun::bernoulli_poly(deg, rule.nodes[i]);
      CHECK_CLOSE(acc, 0.0, 1e-12);
    }
    CHECK_THROWS(specfun::bernoulli_poly(3, 0.2));
  }

  TEST_CASE("double factorial") {
    CHECK(specfun::double_factorial(-1) == 1);
    CHECK(specfun::double_factorial(1) == 1);
    CHECK(specfun::double_factorial(5) == 15);
    CHECK(specfun::double_factorial(11) == 10395);
    CHECK_THROWS(specfun::double_factorial(4));
  }
}
