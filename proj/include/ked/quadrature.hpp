#pragma once

#include <optional>

#include "ked/embedding.hpp"
#include "ked/kernels.hpp"
#include "ked/measures.hpp"
#include "ked/parallel.hpp"

namespace ked {

/// Nodes, optional values, and the derived Gram matrix C and embedding
/// vector m = (K_P(x_1), ..., K_P(x_n)).
struct QuadratureProblem {
  KernelPtr kernel;
  Embedding embedding;
  PointSet nodes;
  std::optional<Vector> values;
  Matrix gram;
  Vector m;
  double jitter = 0.0;  // added to the diagonal of C before any ladder step

  /// Validates that nodes are pairwise distinct (within 1e-12) and builds C and m.
  static QuadratureProblem build(KernelPtr kernel, Embedding embedding, PointSet nodes,
                                 std::optional<Vector> values = std::nullopt, double jitter = 0.0,
                                 parallel::Execution exec = parallel::Execution::parallel);

  std::size_t size() const { return static_cast<std::size_t>(nodes.cols()); }
};

struct BQPosterior {
  double mean = 0.0;
  double variance = 0.0;
  Vector weights;
  double jitter_applied = 0.0;
  bool variance_clamped = false;  // a variance in [-1e-10, 0) was set to 0
};

struct OptimalWeights {
  Vector weights;
  double jitter_applied = 0.0;
};

/// Relative jitter steps tried in turn, as multiples of the mean diagonal of C.
inline constexpr double kJitterLadder[] = {0.0, 1e-12, 1e-10, 1e-8};

/// w = C^{-1} m by Cholesky with the jitter ladder. Throws NumericalError when
/// every step fails.
OptimalWeights optimal_weights(const QuadratureProblem& problem);

/// mu = m^T C^{-1} Y, sigma^2 = K_PP - m^T C^{-1} m.
BQPosterior bq_posterior(const QuadratureProblem& problem);

/// sqrt(K_PP - 2 w^T m + w^T C w).
double wce(const QuadratureProblem& problem, const Vector& weights);

/// K_PP - 2 sum_i w_i K_P(x_i) + sum_ij w_i w_j K(x_i, x_j) for an arbitrary
/// weighted point set; with optimal BQ weights this is the posterior variance.
double mmd2(const Kernel& kernel, const Embedding& p_embedding, const PointSet& points, const Vector& weights,
            parallel::Execution exec = parallel::Execution::parallel);

/// K_PP - 2 K_PQ + K_QQ. Q empirical (any kernel) or gaussian (gaussian
/// kernel with a gaussian P).
double mmd2(const Kernel& kernel, const Measure& p, const Embedding& p_embedding, const Measure& q,
            parallel::Execution exec = parallel::Execution::parallel);

}  // namespace ked
