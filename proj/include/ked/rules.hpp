#pragma once

#include <vector>

namespace ked {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]. Nodes come from Newton iteration
/// on the three-term recurrence; rules are cached per n.
const QuadratureRule& gauss_legendre(int n);

/// Gauss-Legendre mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

/// n-point Gauss-Hermite rule for the standard normal: sum w_i f(x_i) ~ E f(Z).
/// Weights sum to one.
const QuadratureRule& gauss_hermite(int n);

/// Gauss-Legendre on [a, b] after the substitution y = a + (b-a) s(u),
/// s(u) = u^3 (10 - 15u + 6u^2). Nodes cluster at both ends, which restores
/// fast convergence for integrands with algebraic endpoint singularities.
QuadratureRule graded_gauss_legendre(int n, double a, double b);

}  // namespace ked
