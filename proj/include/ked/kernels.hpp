#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ked/transforms.hpp"
#include "ked/types.hpp"

namespace ked {

enum class KernelFamily {
  gaussian,
  matern,
  wendland,
  fbm,
  power_series,
  sphere_sobolev32,
  sphere_smooth,
  periodic_sobolev,
  stein,
  sum,
  product,
  matrix_valued,
  composed,
};

std::string to_string(KernelFamily family);

class Kernel;
using KernelPtr = std::shared_ptr<const Kernel>;

struct GaussianKernel {
  Matrix lambda;        // length-scale matrix (ell_i^2 on the diagonal when diagonal)
  bool diagonal = true;
  Vector lengthscales;  // ell_i, set only when diagonal
  Matrix chol_lower;    // lower Cholesky factor of lambda, set only when not diagonal
};

// Half-integer Matern nu = n + 1/2, isotropic.
struct MaternKernel {
  int n = 0;
  double lengthscale = 1.0;
  double nu() const { return n + 0.5; }
};

struct WendlandKernel {
  int order = 0;  // 0, 2 or 4
  double lengthscale = 1.0;
};

// Fractional Brownian motion on the scalar domain [lower, upper], lower >= 0.
struct FbmKernel {
  double hurst = 0.5;
  double lower = 0.0;
  double upper = 1.0;
};

struct PowerSeriesTerm {
  std::vector<int> alpha;
  double coefficient = 0.0;
};

// Terms are sorted lexicographically by multi-index with duplicates merged.
struct PowerSeriesKernel {
  std::vector<PowerSeriesTerm> terms;
  int dim = 1;
};

// K(x, y) = 2 - ||x - y|| on S^2.
struct SphereSobolev32Kernel {};

// K(x, y) = 48 exp(-12 ||x - y||^2) on S^2.
struct SphereSmoothKernel {};

// Periodic Sobolev kernel of order 2r on [0, 1] (or S^1 through the angle).
struct PeriodicSobolevKernel {
  int r = 1;
};

// First and mixed second derivatives of a base kernel, as needed by the
// Langevin Stein construction.
struct KernelDerivatives {
  std::function<Vector(const VectorRef&, const VectorRef&)> grad_x;
  std::function<Vector(const VectorRef&, const VectorRef&)> grad_y;
  std::function<double(const VectorRef&, const VectorRef&)> trace_cross;  // Tr(grad_x grad_y^T K)
};

struct SteinKernel {
  KernelPtr base;
  ScoreFn score;
  double offset = 0.0;
  std::shared_ptr<const KernelDerivatives> derivatives;
};

struct SumKernel {
  std::vector<KernelPtr> terms;
  std::vector<double> weights;
};

struct ProductFactor {
  KernelPtr kernel;
  std::vector<int> coords;
};

struct ProductKernel {
  std::vector<ProductFactor> factors;
  int dim = 0;
};

struct MatrixValuedKernel {
  KernelPtr base;
  Matrix B;
};

// K(psi(x), psi(y)) for a coordinate-wise map psi.
struct ComposedKernel {
  KernelPtr base;
  Transform map;
};

/// Immutable kernel description. Construct through the factory functions,
/// which validate parameters.
class Kernel : public std::enable_shared_from_this<Kernel> {
 public:
  using Params = std::variant<GaussianKernel, MaternKernel, WendlandKernel, FbmKernel, PowerSeriesKernel,
                              SphereSobolev32Kernel, SphereSmoothKernel, PeriodicSobolevKernel, SteinKernel,
                              SumKernel, ProductKernel, MatrixValuedKernel, ComposedKernel>;

  static KernelPtr gaussian(const Vector& lengthscales);
  static KernelPtr gaussian_full(const Matrix& lambda);
  static KernelPtr matern(int n, double lengthscale);
  static KernelPtr matern_nu(double nu, double lengthscale);
  static KernelPtr wendland(int order, double lengthscale);
  static KernelPtr fbm(double hurst, double lower, double upper);
  static KernelPtr power_series(std::vector<PowerSeriesTerm> terms);
  static KernelPtr sphere_sobolev32();
  static KernelPtr sphere_smooth();
  static KernelPtr periodic_sobolev(int r);
  // Uses the built-in analytic derivatives of `base` (gaussian, matern 5/2).
  static KernelPtr stein(KernelPtr base, ScoreFn score, double offset);
  static KernelPtr stein(KernelPtr base, ScoreFn score, double offset, KernelDerivatives derivatives);
  static KernelPtr sum(std::vector<KernelPtr> terms, std::vector<double> weights);
  static KernelPtr product(std::vector<ProductFactor> factors);
  static KernelPtr matrix_valued(KernelPtr base, const Matrix& B);
  static KernelPtr composed(KernelPtr base, Transform map);

  KernelFamily family() const;
  const Params& params() const { return params_; }

  template <class T>
  const T& as() const {
    return std::get<T>(params_);
  }

  // Input dimension, or -1 when the kernel accepts any dimension.
  int input_dim() const;

  /// Scalar evaluation. Throws for matrix-valued kernels.
  double operator()(const VectorRef& x, const VectorRef& y) const;

  /// B * K_s(x, y) for matrix-valued kernels; a 1x1 matrix otherwise.
  Matrix eval_matrix(const VectorRef& x, const VectorRef& y) const;

  /// Points y in R at which K(x, .) fails to be smooth, for a scalar input x.
  /// Used by the quadrature oracle to split integration intervals.
  std::vector<double> breakpoints_1d(double x) const;

  std::string name() const { return to_string(family()); }

 private:
  explicit Kernel(Params p) : params_(std::move(p)) {}
  Params params_;
};

double kernel_eval(const Kernel& k, const VectorRef& x, const VectorRef& y);
Matrix kernel_eval_matrix(const Kernel& k, const VectorRef& x, const VectorRef& y);

/// Gram matrix K(x_i, x_j) over the columns of `points`.
Matrix gram(const Kernel& k, const PointSet& points);
/// Serial reference for gram(); identical output.
Matrix gram_serial(const Kernel& k, const PointSet& points);
/// Cross matrix K(x_i, y_j).
Matrix cross_gram(const Kernel& k, const PointSet& xs, const PointSet& ys);

/// Matern nu = n + 1/2 as a function of tau = ||x - y|| / ell, explicit forms for n = 0..3.
double matern_explicit(int n, double tau);
/// The same through the general half-integer sum over (n+k)!/(k!(n-k)!).
double matern_general(int n, double tau);

/// 1 + 2 sum_{k=1}^{n_terms} k^{-2r} cos(2 pi k (x - y)).
double periodic_sobolev_series(int r, double x, double y, long n_terms);

/// Maps a point on S^1 (2-vector) or [0, 1] (scalar) to the periodic coordinate in [0, 1].
double periodic_coordinate(const VectorRef& x);

}  // namespace ked
