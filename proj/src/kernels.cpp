#include "ked/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "ked/error.hpp"
#include "ked/parallel.hpp"
#include "ked/specfun.hpp"
#include "ked/stein.hpp"

namespace ked {

namespace {

constexpr double kUnitTolerance = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_dim(const VectorRef& x, const VectorRef& y, int dim, const char* who) {
  if (x.size() != y.size()) throw InvalidArgument(std::string(who) + ": dimension mismatch between x and y");
  if (dim >= 0 && x.size() != dim) {
    throw InvalidArgument(std::string(who) + ": expected inputs of dimension " + std::to_string(dim) + ", got " +
                          std::to_string(x.size()));
  }
}

Vector on_sphere(const VectorRef& x) {
  const double norm = x.norm();
  require(std::abs(norm - 1.0) <= kUnitTolerance, "sphere kernel: input is not on the unit sphere");
  return x / norm;
}

// Integer power by repeated multiplication.
double ipow(double base, int e) {
  double acc = 1.0;
  for (int i = 0; i < e; ++i) acc *= base;
  return acc;
}

double wendland_profile(int order, double tau) {
  if (tau >= 1.0) return 0.0;
  const double s = 1.0 - tau;
  switch (order) {
    case 0:
      return s;
    case 2:
      return s * s * s * (3.0 * tau + 1.0);
    default:
      return s * s * s * s * s * (8.0 * tau * tau + 5.0 * tau + 1.0);
  }
}

double distance(const VectorRef& x, const VectorRef& y) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(acc);
}

double eval_scalar(const Kernel& k, const VectorRef& x, const VectorRef& y) {
  return std::visit(
      Overloaded{
          [&](const GaussianKernel& g) {
            require_dim(x, y, static_cast<int>(g.lambda.rows()), "gaussian kernel");
            double q = 0.0;
            if (g.diagonal) {
              for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double t = (x[i] - y[i]) / g.lengthscales[i];
                q += t * t;
              }
            } else {
              const Vector d = x - y;
              q = g.chol_lower.triangularView<Eigen::Lower>().solve(d).squaredNorm();
            }
            return std::exp(-0.5 * q);
          },
          [&](const MaternKernel& m) {
            require_dim(x, y, -1, "matern kernel");
            return matern_explicit(m.n, distance(x, y) / m.lengthscale);
          },
          [&](const WendlandKernel& w) {
            require_dim(x, y, -1, "wendland kernel");
            return wendland_profile(w.order, distance(x, y) / w.lengthscale);
          },
          [&](const FbmKernel& f) {
            require_dim(x, y, 1, "fbm kernel");
            const double a = x[0];
            const double b = y[0];
            require(a >= f.lower && a <= f.upper && b >= f.lower && b <= f.upper,
                    "fbm kernel: input outside the declared domain");
            const double e = 2.0 * f.hurst;
            return 0.5 * (std::pow(std::abs(a), e) + std::pow(std::abs(b), e) - std::pow(std::abs(a - b), e));
          },
          [&](const PowerSeriesKernel& p) {
            require_dim(x, y, p.dim, "power series kernel");
            double acc = 0.0;
            for (const auto& term : p.terms) {
              double mono = term.coefficient;
              for (int i = 0; i < p.dim; ++i) mono *= ipow(x[i] * y[i], term.alpha[i]);
              acc += mono;
            }
            return acc;
          },
          [&](const SphereSobolev32Kernel&) {
            require_dim(x, y, 3, "sphere sobolev32 kernel");
            return 2.0 - (on_sphere(x) - on_sphere(y)).norm();
          },
          [&](const SphereSmoothKernel&) {
            require_dim(x, y, 3, "sphere smooth kernel");
            return 48.0 * std::exp(-12.0 * (on_sphere(x) - on_sphere(y)).squaredNorm());
          },
          [&](const PeriodicSobolevKernel& ps) {
            require(x.size() == y.size(), "periodic sobolev kernel: dimension mismatch");
            const double t = std::abs(periodic_coordinate(x) - periodic_coordinate(y));
            const int deg = 2 * ps.r;
            const double sign = (ps.r % 2 == 1) ? 1.0 : -1.0;  // (-1)^{r+1}
            return 1.0 + sign * std::pow(2.0 * std::numbers::pi, deg) * specfun::bernoulli_poly(deg, t) /
                             specfun::factorial(deg);
          },
          [&](const SteinKernel& s) { return stein_eval(s, x, y); },
          [&](const SumKernel& s) {
            double acc = 0.0;
            for (std::size_t j = 0; j < s.terms.size(); ++j) acc += s.weights[j] * eval_scalar(*s.terms[j], x, y);
            return acc;
          },
          [&](const ProductKernel& p) {
            require_dim(x, y, p.dim, "product kernel");
            double acc = 1.0;
            for (const auto& f : p.factors) {
              Vector xs(f.coords.size()), ys(f.coords.size());
              for (std::size_t i = 0; i < f.coords.size(); ++i) {
                xs[i] = x[f.coords[i]];
                ys[i] = y[f.coords[i]];
              }
              acc *= eval_scalar(*f.kernel, xs, ys);
            }
            return acc;
          },
          [&](const MatrixValuedKernel&) -> double {
            throw InvalidArgument("matrix-valued kernel has no scalar value; use eval_matrix");
          },
          [&](const ComposedKernel& c) { return eval_scalar(*c.base, c.map(x), c.map(y)); },
      },
      k.params());
}

}  // namespace

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::matern: return "matern";
    case KernelFamily::wendland: return "wendland";
    case KernelFamily::fbm: return "fbm";
    case KernelFamily::power_series: return "power_series";
    case KernelFamily::sphere_sobolev32: return "sphere_sobolev32";
    case KernelFamily::sphere_smooth: return "sphere_smooth";
    case KernelFamily::periodic_sobolev: return "periodic_sobolev";
    case KernelFamily::stein: return "stein";
    case KernelFamily::sum: return "sum";
    case KernelFamily::product: return "product";
    case KernelFamily::matrix_valued: return "matrix_valued";
    case KernelFamily::composed: return "composed";
  }
  return "unknown";
}

KernelPtr Kernel::gaussian(const Vector& lengthscales) {
  require(lengthscales.size() >= 1, "gaussian kernel: need at least one lengthscale");
  require((lengthscales.array() > 0.0).all() && lengthscales.allFinite(),
          "gaussian kernel: lengthscales must be positive and finite");
  GaussianKernel g;
  g.diagonal = true;
  g.lengthscales = lengthscales;
  g.lambda = lengthscales.array().square().matrix().asDiagonal();
  return KernelPtr(new Kernel(std::move(g)));
}

KernelPtr Kernel::gaussian_full(const Matrix& lambda) {
  require(lambda.rows() == lambda.cols() && lambda.rows() >= 1, "gaussian kernel: Lambda must be square");
  require(lambda.allFinite(), "gaussian kernel: Lambda must be finite");
  require((lambda - lambda.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + lambda.cwiseAbs().maxCoeff()),
          "gaussian kernel: Lambda must be symmetric");
  const bool is_diag = (lambda - Matrix(lambda.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (is_diag) {
    require((lambda.diagonal().array() > 0.0).all(), "gaussian kernel: Lambda must be positive-definite");
    return gaussian(lambda.diagonal().cwiseSqrt());
  }
  Eigen::LLT<Matrix> llt(lambda);
  require(llt.info() == Eigen::Success, "gaussian kernel: Lambda must be positive-definite");
  GaussianKernel g;
  g.diagonal = false;
  g.lambda = lambda;
  g.chol_lower = llt.matrixL();
  return KernelPtr(new Kernel(std::move(g)));
}

KernelPtr Kernel::matern(int n, double lengthscale) {
  require(n >= 0 && n <= 3, "matern kernel: only nu = n + 1/2 with n in {0,1,2,3} is supported");
  require(lengthscale > 0.0 && std::isfinite(lengthscale), "matern kernel: lengthscale must be positive");
  return KernelPtr(new Kernel(MaternKernel{n, lengthscale}));
}

KernelPtr Kernel::matern_nu(double nu, double lengthscale) {
  const double n = nu - 0.5;
  require(n == std::floor(n) && n >= 0.0 && n <= 3.0,
          "matern kernel: nu must be one of 0.5, 1.5, 2.5, 3.5");
  return matern(static_cast<int>(n), lengthscale);
}

KernelPtr Kernel::wendland(int order, double lengthscale) {
  require(order == 0 || order == 2 || order == 4, "wendland kernel: order must be 0, 2 or 4");
  require(lengthscale > 0.0 && std::isfinite(lengthscale), "wendland kernel: lengthscale must be positive");
  return KernelPtr(new Kernel(WendlandKernel{order, lengthscale}));
}

KernelPtr Kernel::fbm(double hurst, double lower, double upper) {
  require(hurst > 0.0 && hurst < 1.0, "fbm kernel: Hurst index must lie in (0, 1)");
  require(lower >= 0.0 && upper > lower, "fbm kernel: domain must satisfy 0 <= lower < upper");
  return KernelPtr(new Kernel(FbmKernel{hurst, lower, upper}));
}

KernelPtr Kernel::power_series(std::vector<PowerSeriesTerm> terms) {
  require(!terms.empty(), "power series kernel: need at least one coefficient");
  const std::size_t dim = terms.front().alpha.size();
  require(dim >= 1, "power series kernel: multi-indices must be non-empty");
  std::map<std::vector<int>, double> merged;
  for (const auto& t : terms) {
    require(t.alpha.size() == dim, "power series kernel: multi-indices of differing dimension");
    require(std::all_of(t.alpha.begin(), t.alpha.end(), [](int a) { return a >= 0; }),
            "power series kernel: multi-index entries must be non-negative");
    require(t.coefficient >= 0.0 && std::isfinite(t.coefficient),
            "power series kernel: coefficients must be non-negative");
    merged[t.alpha] += t.coefficient;
  }
  PowerSeriesKernel p;
  p.dim = static_cast<int>(dim);
  for (auto& [alpha, c] : merged) p.terms.push_back({alpha, c});
  return KernelPtr(new Kernel(std::move(p)));
}

KernelPtr Kernel::sphere_sobolev32() { return KernelPtr(new Kernel(SphereSobolev32Kernel{})); }

KernelPtr Kernel::sphere_smooth() { return KernelPtr(new Kernel(SphereSmoothKernel{})); }

KernelPtr Kernel::periodic_sobolev(int r) {
  require(r >= 1 && r <= 6, "periodic sobolev kernel: r must lie in 1..6");
  return KernelPtr(new Kernel(PeriodicSobolevKernel{r}));
}

KernelPtr Kernel::stein(KernelPtr base, ScoreFn score, double offset) {
  require(base != nullptr, "stein kernel: missing base kernel");
  auto derivs = analytic_derivatives(*base);
  require(derivs.has_value(), "stein kernel: base kernel '" + base->name() +
                                  "' has no registered analytic derivatives (gaussian or matern nu=5/2 required)");
  return stein(std::move(base), std::move(score), offset, std::move(*derivs));
}

KernelPtr Kernel::stein(KernelPtr base, ScoreFn score, double offset, KernelDerivatives derivatives) {
  require(base != nullptr, "stein kernel: missing base kernel");
  require(static_cast<bool>(score), "stein kernel: missing score function");
  require(std::isfinite(offset), "stein kernel: offset must be finite");
  require(derivatives.grad_x && derivatives.grad_y && derivatives.trace_cross,
          "stein kernel: incomplete derivative callbacks");
  SteinKernel s;
  s.base = std::move(base);
  s.score = std::move(score);
  s.offset = offset;
  s.derivatives = std::make_shared<const KernelDerivatives>(std::move(derivatives));
  return KernelPtr(new Kernel(std::move(s)));
}

KernelPtr Kernel::sum(std::vector<KernelPtr> terms, std::vector<double> weights) {
  require(!terms.empty(), "sum kernel: need at least one term");
  require(terms.size() == weights.size(), "sum kernel: one weight per term required");
  for (std::size_t j = 0; j < terms.size(); ++j) {
    require(terms[j] != nullptr, "sum kernel: null term");
    require(std::isfinite(weights[j]), "sum kernel: weights must be finite");
    require(terms[j]->family() != KernelFamily::matrix_valued, "sum kernel: matrix-valued terms not supported");
  }
  return KernelPtr(new Kernel(SumKernel{std::move(terms), std::move(weights)}));
}

KernelPtr Kernel::product(std::vector<ProductFactor> factors) {
  require(!factors.empty(), "product kernel: need at least one factor");
  std::set<int> seen;
  int total = 0;
  for (const auto& f : factors) {
    require(f.kernel != nullptr, "product kernel: null factor");
    require(!f.coords.empty(), "product kernel: empty coordinate block");
    const int kd = f.kernel->input_dim();
    require(kd < 0 || kd == static_cast<int>(f.coords.size()),
            "product kernel: block size does not match the factor's input dimension");
    for (int c : f.coords) {
      require(c >= 0, "product kernel: negative coordinate index");
      require(seen.insert(c).second, "product kernel: overlapping coordinate blocks");
    }
    total += static_cast<int>(f.coords.size());
  }
  require(*seen.rbegin() == total - 1, "product kernel: coordinate blocks do not partition 0..d-1");
  return KernelPtr(new Kernel(ProductKernel{std::move(factors), total}));
}

KernelPtr Kernel::matrix_valued(KernelPtr base, const Matrix& B) {
  require(base != nullptr, "matrix-valued kernel: missing base kernel");
  require(base->family() != KernelFamily::matrix_valued, "matrix-valued kernel: base must be scalar-valued");
  require(B.rows() == B.cols() && B.rows() >= 1, "matrix-valued kernel: B must be square");
  require((B - B.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + B.cwiseAbs().maxCoeff()),
          "matrix-valued kernel: B must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(B, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() >= -1e-12 * (1.0 + B.cwiseAbs().maxCoeff()),
          "matrix-valued kernel: B must be positive semi-definite");
  return KernelPtr(new Kernel(MatrixValuedKernel{std::move(base), B}));
}

KernelPtr Kernel::composed(KernelPtr base, Transform map) {
  require(base != nullptr, "composed kernel: missing base kernel");
  return KernelPtr(new Kernel(ComposedKernel{std::move(base), std::move(map)}));
}

KernelFamily Kernel::family() const { return static_cast<KernelFamily>(params_.index()); }

int Kernel::input_dim() const {
  return std::visit(Overloaded{
                        [](const GaussianKernel& g) { return static_cast<int>(g.lambda.rows()); },
                        [](const FbmKernel&) { return 1; },
                        [](const PowerSeriesKernel& p) { return p.dim; },
                        [](const SphereSobolev32Kernel&) { return 3; },
                        [](const SphereSmoothKernel&) { return 3; },
                        [](const SteinKernel& s) { return s.base->input_dim(); },
                        [](const SumKernel& s) {
                          int d = -1;
                          for (const auto& t : s.terms) d = std::max(d, t->input_dim());
                          return d;
                        },
                        [](const ProductKernel& p) { return p.dim; },
                        [](const MatrixValuedKernel& m) { return m.base->input_dim(); },
                        [](const ComposedKernel& c) { return c.base->input_dim(); },
                        [](const auto&) { return -1; },
                    },
                    params_);
}

double Kernel::operator()(const VectorRef& x, const VectorRef& y) const { return eval_scalar(*this, x, y); }

Matrix Kernel::eval_matrix(const VectorRef& x, const VectorRef& y) const {
  if (const auto* m = std::get_if<MatrixValuedKernel>(&params_)) return m->B * (*m->base)(x, y);
  Matrix out(1, 1);
  out(0, 0) = (*this)(x, y);
  return out;
}

std::vector<double> Kernel::breakpoints_1d(double x) const {
  std::vector<double> out = std::visit(
      Overloaded{
          [&](const MaternKernel&) { return std::vector<double>{x}; },
          [&](const WendlandKernel& w) { return std::vector<double>{x - w.lengthscale, x, x + w.lengthscale}; },
          [&](const FbmKernel&) { return std::vector<double>{0.0, x}; },
          [&](const PeriodicSobolevKernel&) { return std::vector<double>{x}; },
          [&](const SphereSobolev32Kernel&) { return std::vector<double>{}; },
          [&](const SteinKernel& s) { return s.base->breakpoints_1d(x); },
          [&](const SumKernel& s) {
            std::vector<double> all;
            for (const auto& t : s.terms) {
              auto b = t->breakpoints_1d(x);
              all.insert(all.end(), b.begin(), b.end());
            }
            return all;
          },
          [&](const MatrixValuedKernel& m) { return m.base->breakpoints_1d(x); },
          [&](const ComposedKernel& c) {
            std::vector<double> mapped;
            const Transform inv = c.map.inverse();
            for (double b : c.base->breakpoints_1d(c.map(x))) {
              try {
                mapped.push_back(inv(b));
              } catch (const InvalidArgument&) {
                // breakpoint outside the map's range
              }
            }
            return mapped;
          },
          [&](const auto&) { return std::vector<double>{}; },
      },
      params_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double kernel_eval(const Kernel& k, const VectorRef& x, const VectorRef& y) { return k(x, y); }

Matrix kernel_eval_matrix(const Kernel& k, const VectorRef& x, const VectorRef& y) { return k.eval_matrix(x, y); }

namespace {

Matrix gram_impl(const Kernel& k, const PointSet& points, parallel::Execution exec) {
  const auto n = static_cast<std::size_t>(points.cols());
  Matrix C(n, n);
  parallel::for_each_index(
      n,
      [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) {
          const double v = k(points.col(i), points.col(j));
          C(i, j) = v;
          C(j, i) = v;
        }
      },
      exec);
  return C;
}

}  // namespace

Matrix gram(const Kernel& k, const PointSet& points) { return gram_impl(k, points, parallel::Execution::parallel); }

Matrix gram_serial(const Kernel& k, const PointSet& points) {
  return gram_impl(k, points, parallel::Execution::serial);
}

Matrix cross_gram(const Kernel& k, const PointSet& xs, const PointSet& ys) {
  Matrix out(xs.cols(), ys.cols());
  parallel::for_each_index(static_cast<std::size_t>(xs.cols()), [&](std::size_t i) {
    for (Eigen::Index j = 0; j < ys.cols(); ++j) out(i, j) = k(xs.col(i), ys.col(j));
  });
  return out;
}

double matern_explicit(int n, double tau) {
  switch (n) {
    case 0:
      return std::exp(-tau);
    case 1: {
      const double s = std::sqrt(3.0) * tau;
      return (1.0 + s) * std::exp(-s);
    }
    case 2: {
      const double s = std::sqrt(5.0) * tau;
      return (1.0 + s + 5.0 / 3.0 * tau * tau) * std::exp(-s);
    }
    case 3: {
      const double s = std::sqrt(7.0) * tau;
      return (1.0 + s + 14.0 / 5.0 * tau * tau + std::pow(7.0, 1.5) / 15.0 * tau * tau * tau) * std::exp(-s);
    }
    default:
      throw InvalidArgument("matern: n must lie in 0..3");
  }
}

double matern_general(int n, double tau) {
  require(n >= 0 && n <= 3, "matern: n must lie in 0..3");
  const double root = std::sqrt(2.0 * n + 1.0);
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double c = specfun::factorial(n + k) / (specfun::factorial(k) * specfun::factorial(n - k));
    acc += c * std::pow(2.0 * root * tau, n - k);
  }
  return std::exp(-root * tau) * specfun::factorial(n) / specfun::factorial(2 * n) * acc;
}

double periodic_sobolev_series(int r, double x, double y, long n_terms) {
  require(r >= 1, "periodic_sobolev_series: r must be >= 1");
  require(n_terms >= 1, "periodic_sobolev_series: n_terms must be >= 1");
  const double t = x - y;
  double acc = 0.0;
  // Smallest terms first.
  for (long k = n_terms; k >= 1; --k) {
    acc += std::pow(static_cast<double>(k), -2.0 * r) * std::cos(2.0 * std::numbers::pi * k * t);
  }
  return 1.0 + 2.0 * acc;
}

double periodic_coordinate(const VectorRef& x) {
  if (x.size() == 1) {
    require(x[0] >= -1e-12 && x[0] <= 1.0 + 1e-12, "periodic sobolev kernel: scalar input must lie in [0, 1]");
    return std::clamp(x[0], 0.0, 1.0);
  }
  require(x.size() == 2, "periodic sobolev kernel: input must be a scalar in [0,1] or a point on S^1");
  const double norm = x.norm();
  require(std::abs(norm - 1.0) <= kUnitTolerance, "periodic sobolev kernel: input is not on the unit circle");
  double t = std::atan2(x[1], x[0]) / (2.0 * std::numbers::pi);
  if (t < 0.0) t += 1.0;
  return t;
}

}  // namespace ked
