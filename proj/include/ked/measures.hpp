#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ked/rng.hpp"
#include "ked/transforms.hpp"
#include "ked/types.hpp"

namespace ked {

enum class MeasureFamily {
  uniform_box,
  gaussian,
  sphere_uniform,
  mixture,
  pushforward,
  empirical,
  unnormalized_score,
  product,
};

std::string to_string(MeasureFamily family);

class Measure;
using MeasurePtr = std::shared_ptr<const Measure>;

struct UniformBox {
  Vector lower;
  Vector upper;
  Vector widths() const { return upper - lower; }
};

struct GaussianMeasure {
  Vector mean;
  Matrix cov;
  Matrix chol_lower;  // cached at construction
  bool diagonal = true;
  double log_det = 0.0;
  bool centered() const { return (mean.array() == 0.0).all(); }
};

// Uniform measure on S^dim embedded in R^{dim+1}; dim in {1, 2}.
struct SphereUniform {
  int dim = 2;
};

struct MixtureMeasure {
  std::vector<MeasurePtr> components;
  std::vector<double> weights;
};

// P = map_# base: samples of P are map(samples of base).
struct PushforwardMeasure {
  MeasurePtr base;
  Transform map;
};

struct EmpiricalMeasure {
  PointSet points;
  Vector weights;
};

// Known only through its score grad log p and an unnormalised log density.
struct UnnormalizedScoreMeasure {
  std::string name;
  int dim = 1;
  ScoreFn score;
  ScalarField log_density;
};

// Independent blocks concatenated in coordinate order.
struct ProductMeasure {
  std::vector<MeasurePtr> factors;
};

class Measure : public std::enable_shared_from_this<Measure> {
 public:
  using Params = std::variant<UniformBox, GaussianMeasure, SphereUniform, MixtureMeasure, PushforwardMeasure,
                              EmpiricalMeasure, UnnormalizedScoreMeasure, ProductMeasure>;

  static MeasurePtr uniform_box(const Vector& lower, const Vector& upper);
  static MeasurePtr gaussian(const Vector& mean, const Matrix& cov);
  static MeasurePtr gaussian_diag(const Vector& mean, const Vector& variances);
  static MeasurePtr sphere_uniform(int dim);
  static MeasurePtr mixture(std::vector<MeasurePtr> components, std::vector<double> weights);
  static MeasurePtr pushforward(MeasurePtr base, Transform map);
  static MeasurePtr empirical(PointSet points, Vector weights);
  static MeasurePtr empirical(PointSet points);
  static MeasurePtr unnormalized(std::string name, int dim, ScoreFn score, ScalarField log_density);
  // Built-in test targets: "quartic" (exp(-sum x^4/4)) and "double_well" (exp(-sum (x^2-1)^2)).
  static MeasurePtr unnormalized_named(const std::string& name, int dim);
  static MeasurePtr product(std::vector<MeasurePtr> factors);

  MeasureFamily family() const { return static_cast<MeasureFamily>(params_.index()); }
  const Params& params() const { return params_; }

  template <class T>
  const T& as() const {
    return std::get<T>(params_);
  }

  // Ambient dimension of the points (S^d lives in R^{d+1}).
  int dim() const;

  bool sampleable() const;
  bool has_density() const;

  /// Lebesgue density; uniform box, gaussian and mixtures/products of those.
  double density(const VectorRef& x) const;
  double log_density(const VectorRef& x) const;

  /// grad log p; gaussian, mixtures of gaussians, unnormalized_score.
  Vector score(const VectorRef& x) const;

  /// Draw number `index` of the stream `rng`; deterministic and independent per index.
  Vector draw(const CounterRng& rng, std::uint64_t index) const;

  /// n points as columns, deterministic in seed.
  PointSet sample(std::size_t n, std::uint64_t seed) const;

  std::string name() const { return to_string(family()); }

 private:
  explicit Measure(Params p) : params_(std::move(p)) {}
  Params params_;
};

double density(const Measure& m, const VectorRef& x);
PointSet sample(const Measure& m, std::size_t n, std::uint64_t seed);
Vector score(const Measure& m, const VectorRef& x);

}  // namespace ked
