#include "ked/quadrature.hpp"

#include <cmath>

#include "ked/dictionary.hpp"
#include "ked/error.hpp"

namespace ked {

namespace {

constexpr double kNegativeSlack = 1e-10;

struct Factor {
  Eigen::LLT<Matrix> llt;
  Vector weights;
  double jitter = 0.0;
};

Factor factorize(const QuadratureProblem& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  const double mean_diag = p.gram.diagonal().mean();
  const double norm_m = p.m.norm();
  for (double step : kJitterLadder) {
    const double jitter = p.jitter + step * mean_diag;
    Matrix C = p.gram;
    C.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(C);
    if (llt.info() != Eigen::Success) continue;
    Vector w = llt.solve(p.m);
    if (!w.allFinite()) continue;
    const double residual = (C * w - p.m).norm();
    if (residual > 1e-8 * std::max(norm_m, 1e-300) && norm_m > 0.0) continue;
    if (n > 0 && llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) continue;
    return Factor{std::move(llt), std::move(w), jitter};
  }
  throw NumericalError("quadrature: Gram matrix is ill-conditioned even after jitter " +
                       std::to_string(kJitterLadder[3]) + " x mean diagonal");
}

}  // namespace

QuadratureProblem QuadratureProblem::build(KernelPtr kernel, Embedding embedding, PointSet nodes,
                                           std::optional<Vector> values, double jitter, parallel::Execution exec) {
  require(kernel != nullptr, "quadrature: missing kernel");
  require(jitter >= 0.0 && std::isfinite(jitter), "quadrature: jitter must be a finite non-negative number");
  const Eigen::Index n = nodes.cols();
  if (values) require(values->size() == n, "quadrature: one value per node");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      require((nodes.col(i) - nodes.col(j)).norm() > 1e-12,
              "quadrature: nodes " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
    }
  }
  Matrix C = exec == parallel::Execution::parallel ? ked::gram(*kernel, nodes) : ked::gram_serial(*kernel, nodes);
  Vector m(n);
  parallel::for_each_index(
      static_cast<std::size_t>(n),
      [&](std::size_t i) { m[static_cast<Eigen::Index>(i)] = embedding.kp_at(nodes.col(static_cast<Eigen::Index>(i))); },
      exec);
  return QuadratureProblem{std::move(kernel), std::move(embedding), std::move(nodes), std::move(values),
                           std::move(C), std::move(m), jitter};
}

OptimalWeights optimal_weights(const QuadratureProblem& problem) {
  if (problem.size() == 0) return OptimalWeights{Vector(0), 0.0};
  Factor f = factorize(problem);
  return OptimalWeights{std::move(f.weights), f.jitter};
}

BQPosterior bq_posterior(const QuadratureProblem& problem) {
  BQPosterior out;
  const double kpp = problem.embedding.kpp();
  if (problem.size() == 0) {
    out.variance = kpp;
    out.weights = Vector(0);
    return out;
  }
  require(problem.values.has_value(), "bq_posterior: values Y are required");
  Factor f = factorize(problem);
  out.weights = f.weights;
  out.jitter_applied = f.jitter;
  out.mean = f.weights.dot(*problem.values);
  double var = kpp - problem.m.dot(f.weights);
  if (var < 0.0) {
    if (var < -kNegativeSlack) {
      throw NumericalError("bq_posterior: negative posterior variance " + std::to_string(var) +
                           " (kernel and embedding inconsistent?)");
    }
    var = 0.0;
    out.variance_clamped = true;
  }
  out.variance = var;
  return out;
}

double wce(const QuadratureProblem& problem, const Vector& w) {
  require(w.size() == static_cast<Eigen::Index>(problem.size()), "wce: one weight per node");
  double radicand = problem.embedding.kpp() - 2.0 * w.dot(problem.m) + w.dot(problem.gram * w);
  if (radicand < 0.0) {
    if (radicand < -kNegativeSlack) {
      throw NumericalError("wce: negative squared error " + std::to_string(radicand));
    }
    radicand = 0.0;
  }
  return std::sqrt(radicand);
}

double mmd2(const Kernel& kernel, const Embedding& ep, const PointSet& points, const Vector& weights,
            parallel::Execution exec) {
  require(points.cols() >= 1, "mmd2: need at least one point");
  require(weights.size() == points.cols(), "mmd2: one weight per point");
  require(points.allFinite() && weights.allFinite(), "mmd2: non-finite points or weights");
  const auto n = static_cast<std::size_t>(points.cols());
  const double kpq = parallel::chunked_sum(
      n,
      [&](std::size_t i) {
        const auto c = static_cast<Eigen::Index>(i);
        return weights[c] * ep.kp_at(points.col(c));
      },
      exec);
  // symmetric double sum: diagonal plus twice the strict upper triangle, row by row
  const double kqq = parallel::chunked_reduce<double>(
      n, 0.0,
      [&](std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        double acc = 0.5 * weights[r] * weights[r] * kernel(points.col(r), points.col(r));
        for (Eigen::Index c = r + 1; c < static_cast<Eigen::Index>(n); ++c) {
          acc += weights[r] * weights[c] * kernel(points.col(r), points.col(c));
        }
        return 2.0 * acc;
      },
      exec);
  return ep.kpp() - 2.0 * kpq + kqq;
}

double mmd2(const Kernel& kernel, const Measure& p, const Embedding& ep, const Measure& q, parallel::Execution exec) {
  require(p.dim() == q.dim(), "mmd2: measures of different dimension");
  if (const auto* e = std::get_if<EmpiricalMeasure>(&q.params())) return mmd2(kernel, ep, e->points, e->weights, exec);
  if (const auto* gq = std::get_if<GaussianMeasure>(&q.params())) {
    const auto* gk = std::get_if<GaussianKernel>(&kernel.params());
    const auto* gp = std::get_if<GaussianMeasure>(&p.params());
    if (gk != nullptr && gp != nullptr) {
      const double kpq = gauss_cross_kpq(gk->lambda, gp->mean, gp->cov, gq->mean, gq->cov);
      const double kqq = gauss_cross_kpq(gk->lambda, gq->mean, gq->cov, gq->mean, gq->cov);
      return ep.kpp() - 2.0 * kpq + kqq;
    }
  }
  throw UnsupportedPair("mmd2: second measure must be empirical, or gaussian with a gaussian kernel and gaussian P");
}

}  // namespace ked
