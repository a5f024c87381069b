#include <numeric>

#include "ked/rules.hpp"
#include "support.hpp"

using namespace ked;

TEST_SUITE("rules") {
  TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 exactly") {
    for (int n : {1, 2, 5, 17, 64, 200}) {
      const auto& r = gauss_legendre(n);
      CHECK(r.nodes.size() == static_cast<std::size_t>(n));
      CHECK_CLOSE(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 2.0, 1e-13);
      const int deg = 2 * n - 1;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += r.weights[static_cast<std::size_t>(i)] * std::pow(r.nodes[static_cast<std::size_t>(i)], deg - 1);
      CHECK_CLOSE(acc, 2.0 / deg, 1e-13);
      CHECK(std::is_sorted(r.nodes.begin(), r.nodes.end()));
    }
    CHECK_THROWS(gauss_legendre(0));
  }

  TEST_CASE("mapped gauss-legendre") {
    const auto r = gauss_legendre(8, 1.0, 3.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * std::exp(r.nodes[i]);
    CHECK_REL(acc, std::exp(3.0) - std::exp(1.0), 1e-14);
  }

  TEST_CASE("gauss-hermite is a probability rule with normal moments") {
    for (int n : {1, 4, 20, 100, 400}) {
      const auto& r = gauss_hermite(n);
      CHECK_CLOSE(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-13);
      CHECK(std::is_sorted(r.nodes.begin(), r.nodes.end()));
      if (n >= 3) {
        double m2 = 0.0;
        double m4 = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
          const double z2 = r.nodes[i] * r.nodes[i];
          m2 += r.weights[i] * z2;
          m4 += r.weights[i] * z2 * z2;
        }
        CHECK_CLOSE(m2, 1.0, 1e-12);
        CHECK_CLOSE(m4, 3.0, 1e-11);
      }
    }
  }

  TEST_CASE("graded rule handles endpoint singularities") {
    const auto r = graded_gauss_legendre(40, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * std::sqrt(r.nodes[i]);
    CHECK_CLOSE(acc, 2.0 / 3.0, 1e-12);
    double w = 0.0;
    for (double x : r.weights) w += x;
    CHECK_CLOSE(w, 1.0, 1e-14);
  }
}
