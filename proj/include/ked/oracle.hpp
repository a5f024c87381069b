#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ked/kernels.hpp"
#include "ked/measures.hpp"
#include "ked/parallel.hpp"

namespace ked {

enum class OracleMethod { gauss_legendre, gauss_hermite, monte_carlo, sphere_mc, exact_sum };

std::string to_string(OracleMethod m);

struct OracleEstimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 for deterministic rules
  OracleMethod method = OracleMethod::monte_carlo;
  std::size_t n = 0;       // nodes per axis or samples (pairs for the U-statistic)
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultNodes = 200;
inline constexpr std::size_t kDefaultSamples = 1'000'000;
/// Larger node budgets for deterministic rules are clamped to this.
inline constexpr std::size_t kMaxNodes = 4000;

struct OracleOptions {
  std::size_t budget = 0;  // 0 selects the default for the chosen method
  std::uint64_t seed = 0;
  parallel::Execution exec = parallel::Execution::parallel;
};

/// Method used for a measure: gauss_legendre for boxes of dimension <= 2,
/// gauss_hermite for 1-d gaussians, sphere_mc for spheres, exact_sum for
/// empirical measures, monte_carlo otherwise. Throws UnsupportedPair for
/// measures that can be neither sampled nor integrated.
OracleMethod oracle_method(const Measure& m);
bool is_deterministic(OracleMethod m);

/// Per-axis non-smooth points, used to split intervals.
using AxisBreaks = std::vector<std::vector<double>>;

/// Breakpoints of y -> K(x, y) along each axis, when known.
AxisBreaks axis_breakpoints(const Kernel& k, const VectorRef& x);

/// int f dP. With breakpoints, 1-d rules are split there and use graded
/// nodes on each piece; `graded` forces graded nodes on unsplit boxes.
OracleEstimate integrate(const ScalarField& f, const Measure& m, const OracleOptions& opts,
                         const AxisBreaks& breaks = {}, bool graded = false);

/// Numerical K_P(x).
OracleEstimate estimate_kp(const Kernel& k, const Measure& m, const VectorRef& x, const OracleOptions& opts = {});

/// Numerical K_PP: nested quadrature for deterministic methods, the
/// off-diagonal U-statistic with jackknife standard error for Monte Carlo.
OracleEstimate estimate_kpp(const Kernel& k, const Measure& m, const OracleOptions& opts = {});

/// E f(Z) for Z ~ N(mu, sigma^2) by an n-node Gauss-Hermite rule.
double gauss_hermite_expectation(const std::function<double(double)>& f, double mu, double sigma, int n);

/// Seed of child stream `id`, for nested estimators.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id);

}  // namespace ked
