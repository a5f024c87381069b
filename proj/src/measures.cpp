#include "ked/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "ked/error.hpp"

namespace ked {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kWeightTolerance = 1e-12;

std::size_t pick_category(const std::vector<double>& weights, double u) {
  double cumulative = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    cumulative += weights[j];
    if (u < cumulative) return j;
  }
  // u beyond the rounded total: last component with positive weight
  for (std::size_t j = weights.size(); j-- > 0;) {
    if (weights[j] > 0.0) return j;
  }
  return weights.size() - 1;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void check_weights(const std::vector<double>& w, const char* who) {
  require(!w.empty(), std::string(who) + ": need at least one weight");
  double total = 0.0;
  for (double x : w) {
    require(x >= 0.0 && std::isfinite(x), std::string(who) + ": weights must be non-negative");
    total += x;
  }
  require(std::abs(total - 1.0) <= kWeightTolerance, std::string(who) + ": weights must sum to 1");
}

}  // namespace

std::string to_string(MeasureFamily family) {
  switch (family) {
    case MeasureFamily::uniform_box: return "uniform_box";
    case MeasureFamily::gaussian: return "gaussian";
    case MeasureFamily::sphere_uniform: return "sphere_uniform";
    case MeasureFamily::mixture: return "mixture";
    case MeasureFamily::pushforward: return "pushforward";
    case MeasureFamily::empirical: return "empirical";
    case MeasureFamily::unnormalized_score: return "unnormalized_score";
    case MeasureFamily::product: return "product";
  }
  return "unknown";
}

MeasurePtr Measure::uniform_box(const Vector& lower, const Vector& upper) {
  require(lower.size() >= 1 && lower.size() == upper.size(), "uniform box: bounds must have equal, positive length");
  require(lower.allFinite() && upper.allFinite(), "uniform box: bounds must be finite");
  require(((upper - lower).array() > 0.0).all(), "uniform box: need lower < upper in every dimension");
  return MeasurePtr(new Measure(UniformBox{lower, upper}));
}

MeasurePtr Measure::gaussian(const Vector& mean, const Matrix& cov) {
  const auto d = mean.size();
  require(d >= 1, "gaussian measure: empty mean");
  require(cov.rows() == d && cov.cols() == d, "gaussian measure: covariance shape does not match the mean");
  require(mean.allFinite() && cov.allFinite(), "gaussian measure: parameters must be finite");
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()),
          "gaussian measure: covariance must be symmetric");
  Eigen::LLT<Matrix> llt(cov);
  require(llt.info() == Eigen::Success && (cov.diagonal().array() > 0.0).all(),
          "gaussian measure: covariance must be positive-definite");
  GaussianMeasure g;
  g.mean = mean;
  g.cov = cov;
  g.chol_lower = llt.matrixL();
  g.diagonal = (cov - Matrix(cov.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  g.log_det = 2.0 * g.chol_lower.diagonal().array().log().sum();
  return MeasurePtr(new Measure(std::move(g)));
}

MeasurePtr Measure::gaussian_diag(const Vector& mean, const Vector& variances) {
  require(mean.size() == variances.size(), "gaussian measure: variances length does not match the mean");
  return gaussian(mean, variances.asDiagonal());
}

MeasurePtr Measure::sphere_uniform(int dim) {
  require(dim == 1 || dim == 2, "sphere measure: only S^1 and S^2 are supported");
  return MeasurePtr(new Measure(SphereUniform{dim}));
}

MeasurePtr Measure::mixture(std::vector<MeasurePtr> components, std::vector<double> weights) {
  require(!components.empty() && components.size() == weights.size(),
          "mixture: one weight per component required");
  check_weights(weights, "mixture");
  const int d = components.front()->dim();
  for (const auto& c : components) {
    require(c != nullptr, "mixture: null component");
    require(c->dim() == d, "mixture: components of differing dimension");
  }
  return MeasurePtr(new Measure(MixtureMeasure{std::move(components), std::move(weights)}));
}

MeasurePtr Measure::pushforward(MeasurePtr base, Transform map) {
  require(base != nullptr, "pushforward: missing base measure");
  return MeasurePtr(new Measure(PushforwardMeasure{std::move(base), std::move(map)}));
}

MeasurePtr Measure::empirical(PointSet points, Vector weights) {
  require(points.cols() >= 1 && points.rows() >= 1, "empirical measure: need at least one point");
  require(weights.size() == points.cols(), "empirical measure: one weight per point required");
  require(points.allFinite() && weights.allFinite(), "empirical measure: non-finite entries");
  require(std::abs(weights.sum() - 1.0) <= kWeightTolerance, "empirical measure: weights must sum to 1");
  return MeasurePtr(new Measure(EmpiricalMeasure{std::move(points), std::move(weights)}));
}

MeasurePtr Measure::empirical(PointSet points) {
  const auto n = points.cols();
  require(n >= 1, "empirical measure: need at least one point");
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  return empirical(std::move(points), std::move(w));
}

MeasurePtr Measure::unnormalized(std::string name, int dim, ScoreFn score, ScalarField log_density) {
  require(dim >= 1, "unnormalized measure: dimension must be >= 1");
  require(static_cast<bool>(score), "unnormalized measure: missing score function");
  return MeasurePtr(
      new Measure(UnnormalizedScoreMeasure{std::move(name), dim, std::move(score), std::move(log_density)}));
}

MeasurePtr Measure::unnormalized_named(const std::string& name, int dim) {
  if (name == "quartic") {
    return unnormalized(
        name, dim, [](const VectorRef& x) -> Vector { return -x.array().cube().matrix(); },
        [](const VectorRef& x) { return -0.25 * x.array().pow(4).sum(); });
  }
  if (name == "double_well") {
    return unnormalized(
        name, dim,
        [](const VectorRef& x) -> Vector { return (-4.0 * x.array() * (x.array().square() - 1.0)).matrix(); },
        [](const VectorRef& x) { return -(x.array().square() - 1.0).square().sum(); });
  }
  throw InvalidArgument("unknown unnormalized density '" + name + "' (expected quartic or double_well)");
}

MeasurePtr Measure::product(std::vector<MeasurePtr> factors) {
  require(!factors.empty(), "product measure: need at least one factor");
  for (const auto& f : factors) require(f != nullptr, "product measure: null factor");
  return MeasurePtr(new Measure(ProductMeasure{std::move(factors)}));
}

int Measure::dim() const {
  return std::visit(Overloaded{
                        [](const UniformBox& u) { return static_cast<int>(u.lower.size()); },
                        [](const GaussianMeasure& g) { return static_cast<int>(g.mean.size()); },
                        [](const SphereUniform& s) { return s.dim + 1; },
                        [](const MixtureMeasure& m) { return m.components.front()->dim(); },
                        [](const PushforwardMeasure& p) { return p.base->dim(); },
                        [](const EmpiricalMeasure& e) { return static_cast<int>(e.points.rows()); },
                        [](const UnnormalizedScoreMeasure& u) { return u.dim; },
                        [](const ProductMeasure& p) {
                          int d = 0;
                          for (const auto& f : p.factors) d += f->dim();
                          return d;
                        },
                    },
                    params_);
}

bool Measure::sampleable() const {
  return std::visit(Overloaded{
                        [](const UnnormalizedScoreMeasure&) { return false; },
                        [](const MixtureMeasure& m) {
                          return std::all_of(m.components.begin(), m.components.end(),
                                             [](const MeasurePtr& c) { return c->sampleable(); });
                        },
                        [](const PushforwardMeasure& p) { return p.base->sampleable(); },
                        [](const ProductMeasure& p) {
                          return std::all_of(p.factors.begin(), p.factors.end(),
                                             [](const MeasurePtr& c) { return c->sampleable(); });
                        },
                        [](const auto&) { return true; },
                    },
                    params_);
}

bool Measure::has_density() const {
  return std::visit(Overloaded{
                        [](const UniformBox&) { return true; },
                        [](const GaussianMeasure&) { return true; },
                        [](const MixtureMeasure& m) {
                          return std::all_of(m.components.begin(), m.components.end(),
                                             [](const MeasurePtr& c) { return c->has_density(); });
                        },
                        [](const ProductMeasure& p) {
                          return std::all_of(p.factors.begin(), p.factors.end(),
                                             [](const MeasurePtr& c) { return c->has_density(); });
                        },
                        [](const auto&) { return false; },
                    },
                    params_);
}

double Measure::log_density(const VectorRef& x) const {
  require(x.size() == dim(), "density: dimension mismatch");
  return std::visit(
      Overloaded{
          [&](const UniformBox& u) {
            for (Eigen::Index i = 0; i < x.size(); ++i) {
              if (x[i] < u.lower[i] || x[i] > u.upper[i]) return -std::numeric_limits<double>::infinity();
            }
            return -u.widths().array().log().sum();
          },
          [&](const GaussianMeasure& g) {
            const Vector z = g.chol_lower.triangularView<Eigen::Lower>().solve(x - g.mean);
            const double d = static_cast<double>(g.mean.size());
            return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * g.log_det - 0.5 * z.squaredNorm();
          },
          [&](const MixtureMeasure& m) {
            std::vector<double> terms;
            for (std::size_t j = 0; j < m.components.size(); ++j) {
              terms.push_back(m.weights[j] > 0.0 ? std::log(m.weights[j]) + m.components[j]->log_density(x)
                                                 : -std::numeric_limits<double>::infinity());
            }
            return log_sum_exp(terms);
          },
          [&](const ProductMeasure& p) {
            double acc = 0.0;
            Eigen::Index offset = 0;
            for (const auto& f : p.factors) {
              acc += f->log_density(x.segment(offset, f->dim()));
              offset += f->dim();
            }
            return acc;
          },
          [&](const auto&) -> double {
            throw InvalidArgument("density: measure family '" + name() + "' has no Lebesgue density");
          },
      },
      params_);
}

double Measure::density(const VectorRef& x) const { return std::exp(log_density(x)); }

Vector Measure::score(const VectorRef& x) const {
  require(x.size() == dim(), "score: dimension mismatch");
  return std::visit(
      Overloaded{
          [&](const GaussianMeasure& g) -> Vector {
            const auto L = g.chol_lower.triangularView<Eigen::Lower>();
            const Vector z = L.solve(x - g.mean);
            return -L.transpose().solve(z);
          },
          [&](const MixtureMeasure& m) -> Vector {
            std::vector<double> logs;
            for (std::size_t j = 0; j < m.components.size(); ++j) {
              logs.push_back(m.weights[j] > 0.0 ? std::log(m.weights[j]) + m.components[j]->log_density(x)
                                                : -std::numeric_limits<double>::infinity());
            }
            const double total = log_sum_exp(logs);
            Vector s = Vector::Zero(x.size());
            for (std::size_t j = 0; j < m.components.size(); ++j) {
              if (m.weights[j] > 0.0) s += std::exp(logs[j] - total) * m.components[j]->score(x);
            }
            return s;
          },
          [&](const UnnormalizedScoreMeasure& u) -> Vector { return u.score(x); },
          [&](const ProductMeasure& p) -> Vector {
            Vector s(x.size());
            Eigen::Index offset = 0;
            for (const auto& f : p.factors) {
              s.segment(offset, f->dim()) = f->score(x.segment(offset, f->dim()));
              offset += f->dim();
            }
            return s;
          },
          [&](const auto&) -> Vector {
            throw InvalidArgument("score: measure family '" + name() + "' has no differentiable density");
          },
      },
      params_);
}

Vector Measure::draw(const CounterRng& rng, std::uint64_t index) const {
  return std::visit(
      Overloaded{
          [&](const UniformBox& u) -> Vector {
            const auto d = static_cast<std::uint64_t>(u.lower.size());
            Vector x(u.lower.size());
            for (std::uint64_t k = 0; k < d; ++k) {
              x[k] = u.lower[k] + (u.upper[k] - u.lower[k]) * rng.uniform(index * d + k);
            }
            return x;
          },
          [&](const GaussianMeasure& g) -> Vector {
            const auto d = static_cast<std::uint64_t>(g.mean.size());
            Vector z(g.mean.size());
            for (std::uint64_t k = 0; k < d; ++k) z[k] = rng.normal(index * d + k);
            return g.mean + g.chol_lower.triangularView<Eigen::Lower>() * z;
          },
          [&](const SphereUniform& s) -> Vector {
            const auto d = static_cast<std::uint64_t>(s.dim + 1);
            Vector z(s.dim + 1);
            for (std::uint64_t k = 0; k < d; ++k) z[k] = rng.normal(index * d + k);
            return z / z.norm();
          },
          [&](const MixtureMeasure& m) -> Vector {
            const std::size_t j = pick_category(m.weights, rng.substream(0).uniform(index));
            return m.components[j]->draw(rng.substream(j + 1), index);
          },
          [&](const PushforwardMeasure& p) -> Vector { return p.map(p.base->draw(rng, index)); },
          [&](const EmpiricalMeasure& e) -> Vector {
            std::vector<double> w(e.weights.data(), e.weights.data() + e.weights.size());
            return e.points.col(static_cast<Eigen::Index>(pick_category(w, rng.uniform(index))));
          },
          [&](const UnnormalizedScoreMeasure& u) -> Vector {
            throw InvalidArgument("sample: unnormalized measure '" + u.name +
                                  "' cannot be sampled; only Stein identities apply");
          },
          [&](const ProductMeasure& p) -> Vector {
            Vector x(dim());
            Eigen::Index offset = 0;
            for (std::size_t f = 0; f < p.factors.size(); ++f) {
              x.segment(offset, p.factors[f]->dim()) = p.factors[f]->draw(rng.substream(f + 1), index);
              offset += p.factors[f]->dim();
            }
            return x;
          },
      },
      params_);
}

PointSet Measure::sample(std::size_t n, std::uint64_t seed) const {
  require(n >= 1, "sample: n must be >= 1");
  require(sampleable(), "sample: measure '" + name() + "' is not sampleable");
  const CounterRng rng(seed);
  PointSet out(dim(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.col(static_cast<Eigen::Index>(i)) = draw(rng, i);
  return out;
}

double density(const Measure& m, const VectorRef& x) { return m.density(x); }
PointSet sample(const Measure& m, std::size_t n, std::uint64_t seed) { return m.sample(n, seed); }
Vector score(const Measure& m, const VectorRef& x) { return m.score(x); }

}  // namespace ked
