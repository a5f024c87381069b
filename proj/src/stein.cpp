#include "ked/stein.hpp"

#include <cmath>

#include "ked/error.hpp"

namespace ked {

namespace {

KernelDerivatives gaussian_derivatives(const GaussianKernel& g) {
  const Matrix inv = g.lambda.llt().solve(Matrix::Identity(g.lambda.rows(), g.lambda.cols()));
  const double trace = inv.trace();
  auto value = [inv](const VectorRef& x, const VectorRef& y, Vector& u) {
    const Vector d = x - y;
    u = inv * d;
    return std::exp(-0.5 * d.dot(u));
  };
  KernelDerivatives out;
  out.grad_x = [value](const VectorRef& x, const VectorRef& y) -> Vector {
    Vector u;
    const double k = value(x, y, u);
    return -k * u;
  };
  out.grad_y = [value](const VectorRef& x, const VectorRef& y) -> Vector {
    Vector u;
    const double k = value(x, y, u);
    return k * u;
  };
  out.trace_cross = [value, trace](const VectorRef& x, const VectorRef& y) {
    Vector u;
    const double k = value(x, y, u);
    return (trace - u.squaredNorm()) * k;
  };
  return out;
}

// Matern 5/2 as a radial profile g(s), s = |x - y|:
//   g'(s)/s = -5/(3 ell^2) (1 + sqrt5 s/ell) e^{-sqrt5 s/ell}
//   g''(s)  = -5/(3 ell^2) (1 + sqrt5 s/ell - 5 s^2/ell^2) e^{-sqrt5 s/ell}
KernelDerivatives matern52_derivatives(double ell) {
  const double c = 5.0 / (3.0 * ell * ell);
  const double q = std::sqrt(5.0) / ell;
  KernelDerivatives out;
  out.grad_x = [c, q](const VectorRef& x, const VectorRef& y) -> Vector {
    const Vector d = x - y;
    const double s = d.norm();
    return -c * (1.0 + q * s) * std::exp(-q * s) * d;
  };
  out.grad_y = [c, q](const VectorRef& x, const VectorRef& y) -> Vector {
    const Vector d = x - y;
    const double s = d.norm();
    return c * (1.0 + q * s) * std::exp(-q * s) * d;
  };
  out.trace_cross = [c, q](const VectorRef& x, const VectorRef& y) {
    const double s = (x - y).norm();
    const double e = std::exp(-q * s);
    const double g1_over_s = -c * (1.0 + q * s) * e;
    const double g2 = -c * (1.0 + q * s - q * q * s * s) * e;
    return -(g2 + g1_over_s * (static_cast<double>(x.size()) - 1.0));
  };
  return out;
}

}  // namespace

std::optional<KernelDerivatives> analytic_derivatives(const Kernel& base) {
  if (const auto* g = std::get_if<GaussianKernel>(&base.params())) return gaussian_derivatives(*g);
  if (const auto* m = std::get_if<MaternKernel>(&base.params())) {
    if (m->n == 2) return matern52_derivatives(m->lengthscale);
  }
  return std::nullopt;
}

double stein_eval(const SteinKernel& sk, const VectorRef& x, const VectorRef& y) {
  require(x.size() == y.size(), "stein kernel: dimension mismatch");
  const Vector sx = sk.score(x);
  const Vector sy = sk.score(y);
  const KernelDerivatives& d = *sk.derivatives;
  return (*sk.base)(x, y) * sx.dot(sy) + d.grad_x(x, y).dot(sy) + d.grad_y(x, y).dot(sx) + d.trace_cross(x, y) +
         sk.offset;
}

Embedding stein_embed(const SteinKernel& sk) {
  const double c = sk.offset;
  ScalarField kp = [c](const VectorRef&) { return c; };
  return Embedding("stein/target", std::move(kp), Provenance::closed_form, c, Provenance::closed_form);
}

}  // namespace ked
