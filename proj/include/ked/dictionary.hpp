#pragma once

#include "ked/embedding.hpp"
#include "ked/kernels.hpp"
#include "ked/measures.hpp"
#include "ked/oracle.hpp"

namespace ked {

/// Embedding of `kernel` against `measure`.
///
/// Pairs with a known closed form dispatch to the functions below; product,
/// sum, mixture, change-of-variable and Stein constructions route through the
/// combinators; everything else becomes a numeric_fallback embedding backed by
/// the oracle with the given budget and seed. Matrix-valued kernels go
/// through embed_matrix().
Embedding embed(const Kernel& kernel, const Measure& measure, const OracleOptions& fallback = {});
MatrixEmbedding embed_matrix(const Kernel& kernel, const Measure& measure, const OracleOptions& fallback = {});

/// "<kernel family>/<measure family>"
std::string pair_id(const Kernel& kernel, const Measure& measure);

// Gaussian kernel

/// Diagonal lengthscales against a uniform box; factorises over dimensions.
Embedding gauss_uniform(const Vector& lengthscales, const Vector& lower, const Vector& upper);
/// Any SPD Lambda against N(mu, Sigma).
Embedding gauss_gauss(const Matrix& lambda, const Vector& mu, const Matrix& sigma);
/// int int K dP dQ for P = N(mu_p, Sigma_p), Q = N(mu_q, Sigma_q).
double gauss_cross_kpq(const Matrix& lambda, const Vector& mu_p, const Matrix& sigma_p, const Vector& mu_q,
                       const Matrix& sigma_q);

// Matern nu = n + 1/2

struct MaternUniformCoefficients {
  int n = 0;
  double alpha = 1.0;  // ell / sqrt(2n+1)
  double rho = 1.0;    // r / alpha
  std::vector<double> c;  // c_{n,m}, m = 0..n

  MaternUniformCoefficients(int n, double lengthscale, double r);
  /// e^{-z} sum_m c_{n,m} z^m
  double Q(double z) const;
  /// c_{n,0} - Q(z), without cancellation for small z.
  double c0_minus_Q(double z) const;
};

struct MaternGaussianShifts {
  double mu1, mu2, mu3, mu4;
  double s;  // sqrt(2) sigma
  MaternGaussianShifts(double lengthscale, double mu, double sigma);
};

/// Through Q_n and the lower incomplete gamma function.
Embedding matern_uniform_general(int n, double lengthscale, double a, double b);
/// The explicit n = 0..3 forms in d_n and rho_n.
Embedding matern_uniform_special(int n, double lengthscale, double a, double b);
/// n in {0, 1, 2}; K_P closed form, K_PP by one-dimensional quadrature of K_P.
Embedding matern_gauss_kp(int n, double lengthscale, double mu, double sigma, const OracleOptions& fallback = {});
double matern_gauss_kp_value(int n, double lengthscale, double mu, double sigma, double x);

// Wendland

Embedding wendland0_uniform(double lengthscale, double a, double b);
double wendland0_uniform_kp(double lengthscale, double a, double b, double x);
double wendland0_uniform_kpp(double lengthscale, double r);
/// order in {0, 2}; non-centred measures are handled by translation.
Embedding wendland_gauss_kp(int order, double lengthscale, double mu, double sigma, const OracleOptions& fallback = {});
double wendland_gauss_kp_value(int order, double lengthscale, double sigma, double x);

// Fractional Brownian motion

Embedding fbm_uniform(double hurst, double a, double b);

// Power series

Embedding powerseries_uniform(const PowerSeriesKernel& k, const Vector& lower, const Vector& upper);
/// Centred diagonal gaussian with standard deviations sigma_i.
Embedding powerseries_gauss(const PowerSeriesKernel& k, const Vector& sigmas);

// Constant embeddings

enum class SphereKernelKind { sobolev32, smooth };
Embedding sphere_embed(SphereKernelKind kind);
Embedding periodic_sobolev_embed(int r);

}  // namespace ked
