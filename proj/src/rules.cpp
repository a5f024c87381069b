#include "ked/rules.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "ked/error.hpp"
#include "ked/types.hpp"

namespace ked {

namespace {

QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      dp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z_old = z;
      z = z_old - p1 / dp;
      if (std::abs(z - z_old) <= 1e-16) break;
    }
    // recompute the derivative at the converged node
    double p1 = 1.0;
    double p2 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
    }
    dp = n * (z * p1 - p2) / (z * z - 1.0);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

// Physicists' Hermite nodes via the orthonormal recurrence, then rescaled to
// the standard normal weight.
QuadratureRule compute_gauss_hermite(int n) {
  // Golub-Welsch for starting values, then Newton on the orthonormal recurrence.
  Vector diag = Vector::Zero(n);
  Vector sub(std::max(n - 1, 1));
  for (int j = 1; j < n; ++j) sub[j - 1] = std::sqrt(0.5 * j);
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::EigenvaluesOnly);
  const Vector& start = solver.eigenvalues();

  const double pim4 = std::pow(std::numbers::pi, -0.25);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = start[i];
    double pp = 1.0;
    for (int it = 0; it < 8; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double step = p1 / pp;
      z -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = z * std::numbers::sqrt2;
    rule.weights[i] = 2.0 / (pp * pp) / std::sqrt(std::numbers::pi);
  }
  // enforce symmetry
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

template <class Compute>
const QuadratureRule& cached(std::map<int, QuadratureRule>& cache, std::mutex& mutex, int n, Compute compute) {
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute(n)).first;
  return it->second;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: need at least one node");
  static std::map<int, QuadratureRule> cache;
  static std::mutex mutex;
  return cached(cache, mutex, n, compute_gauss_legendre);
}

QuadratureRule gauss_legendre(int n, double a, double b) {
  const QuadratureRule& ref = gauss_legendre(n);
  QuadratureRule out;
  out.nodes.resize(n);
  out.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    out.nodes[i] = mid + half * ref.nodes[i];
    out.weights[i] = half * ref.weights[i];
  }
  return out;
}

const QuadratureRule& gauss_hermite(int n) {
  require(n >= 1, "gauss_hermite: need at least one node");
  static std::map<int, QuadratureRule> cache;
  static std::mutex mutex;
  return cached(cache, mutex, n, compute_gauss_hermite);
}

QuadratureRule graded_gauss_legendre(int n, double a, double b) {
  const QuadratureRule& ref = gauss_legendre(n);
  QuadratureRule out;
  out.nodes.resize(n);
  out.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (ref.nodes[i] + 1.0);
    const double s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    const double ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
    out.nodes[i] = a + (b - a) * s;
    out.weights[i] = 0.5 * ref.weights[i] * (b - a) * ds;
  }
  return out;
}

}  // namespace ked
