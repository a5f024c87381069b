#include "ked/dictionary.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "ked/combinators.hpp"
#include "ked/error.hpp"
#include "ked/specfun.hpp"
#include "ked/stein.hpp"

namespace ked {

namespace {

using specfun::erf;
using specfun::exp_times_normal_cdf;

constexpr double kSqrtPi = 1.7724538509055160273;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSqrt2Pi = 2.5066282746310005024;

std::string id_of(KernelFamily k, MeasureFamily m) { return to_string(k) + "/" + to_string(m); }

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

// erf(u) - erf(v) without cancellation when u and v share a tail.
double erf_diff(double u, double v) {
  if (u > 0.0 && v > 0.0) return std::erfc(v) - std::erfc(u);
  if (u < 0.0 && v < 0.0) return std::erfc(-u) - std::erfc(-v);
  return erf(u) - erf(v);
}

double log_det_spd(const Matrix& m, const char* who) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidArgument(std::string(who) + ": matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double scalar1(const VectorRef& x) {
  require(x.size() == 1, "embedding: expected a scalar point");
  return x[0];
}

// ---- Matern ----

// G_n(z) = int_0^z k_n(u) du in units of alpha_n, for the explicit n = 0..3 forms.
double matern_special_G(int n, double z) {
  const double em1 = std::expm1(-z);
  const double e = std::exp(-z);
  switch (n) {
    case 0: return -em1;
    case 1: return -2.0 * em1 - z * e;
    case 2: return (-8.0 * em1 - e * z * (5.0 + z)) / 3.0;
    case 3: return (-48.0 * em1 - e * z * (33.0 + z * (9.0 + z))) / 15.0;
    default: break;
  }
  throw InvalidArgument("matern: n must be in 0..3");
}

// c0 - G(z)
double matern_special_tail(int n, double z) {
  const double e = std::exp(-z);
  switch (n) {
    case 0: return e;
    case 1: return e * (2.0 + z);
    case 2: return e * (8.0 + z * (5.0 + z)) / 3.0;
    case 3: return e * (48.0 + z * (33.0 + z * (9.0 + z))) / 15.0;
    default: break;
  }
  throw InvalidArgument("matern: n must be in 0..3");
}

double matern_special_kpp(int n, double rho) {
  const double em1 = std::expm1(-rho);
  const double e = std::exp(-rho);
  const double r2 = rho * rho;
  switch (n) {
    case 0: return 2.0 / r2 * (rho + em1);
    case 1: return 2.0 / r2 * (2.0 * rho + 3.0 * em1 + rho * e);
    case 2: return 2.0 / (3.0 * r2) * (8.0 * rho + 15.0 * em1 + e * rho * (rho + 7.0));
    case 3: return 2.0 / (15.0 * r2) * (48.0 * rho + 105.0 * em1 + e * rho * (rho * (rho + 12.0) + 57.0));
    default: break;
  }
  throw InvalidArgument("matern: n must be in 0..3");
}

// K_P on [a, b] from an antiderivative g of the kernel profile and its tail
// q = g(inf) - g; outside the interval the difference is taken on the tails.
template <class G, class Q>
double matern_uniform_kp(const G& g, const Q& q, double alpha, double a, double b, double x) {
  const double r = b - a;
  if (x < a) return alpha / r * (q((a - x) / alpha) - q((b - x) / alpha));
  if (x > b) return alpha / r * (q((x - b) / alpha) - q((x - a) / alpha));
  return alpha / r * (g((x - a) / alpha) + g((b - x) / alpha));
}

void check_interval(double a, double b, const char* who) {
  require(std::isfinite(a) && std::isfinite(b) && b > a, std::string(who) + ": need b > a");
}

// ---- Wendland ----

// int_lo^hi (1 - |x - y| / ell) dy for [lo, hi] inside [x - ell, x + ell].
double wendland0_piece(double ell, double x, double lo, double hi) {
  auto F = [&](double y) {  // antiderivative of 1 - |x - y| / ell
    const double d = y - x;
    return d - std::copysign(d * d, d) / (2.0 * ell);
  };
  return F(hi) - F(lo);
}

double wendland_gauss_value(int order, double ell, double sigma, double x) {
  const double s = kSqrt2 * sigma;
  const double s2 = sigma * sigma;
  auto phi = [&](double u) { return std::exp(-u * u / (2.0 * s2)); };
  const double c = s / kSqrtPi;
  if (order == 0) {
    return (1.0 / (2.0 * ell)) * ((ell - x) * erf((ell - x) / s) + (ell + x) * erf((ell + x) / s) -
                                  2.0 * x * erf(x / s) + c * (phi(ell - x) + phi(ell + x) - 2.0 * phi(x)));
  }
  if (order == 2) {
    const double l2 = ell * ell;
    const double l3 = l2 * ell;
    const double l4 = l2 * l2;
    const double x2 = x * x;
    const double x3 = x2 * x;
    const double x4 = x2 * x2;
    const double pm = phi(x - ell);
    const double pp = phi(x + ell);
    const double bracket_phi =
        (pm + pp) * (l3 - ell * (7.0 * s2 + 5.0 * x2)) + 16.0 * ell * (2.0 * s2 + x2) * phi(x) -
        (pp - pm) * (l2 * x + 3.0 * x * (5.0 * s2 + x2));
    const double base = l4 - 6.0 * l2 * (s2 + x2) - 3.0 * (3.0 * s2 * s2 + 6.0 * s2 * x2 + x4);
    const double odd = 8.0 * ell * (3.0 * s2 * x + x3);
    return (1.0 / (2.0 * l4)) * (c * bracket_phi + (base + odd) * erf((ell - x) / s) +
                                 (base - odd) * erf((ell + x) / s) + 16.0 * ell * x * (3.0 * s2 + x2) * erf(x / s));
  }
  throw InvalidArgument("wendland/gaussian: order must be 0 or 2");
}

// ---- power series ----

template <class Moment>
Embedding powerseries_embed(const PowerSeriesKernel& k, Moment moment, const std::string& id) {
  std::vector<double> factors;
  for (const auto& t : k.terms) {
    double f = 1.0;
    for (std::size_t i = 0; i < t.alpha.size(); ++i) f *= moment(i, t.alpha[i]);
    factors.push_back(f);
  }
  double kpp = 0.0;
  for (std::size_t j = 0; j < k.terms.size(); ++j) kpp += k.terms[j].coefficient * factors[j] * factors[j];
  ScalarField kp = [k, factors](const VectorRef& x) {
    require(x.size() == k.dim, "power series embedding: dimension mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < k.terms.size(); ++j) {
      if (factors[j] == 0.0) continue;
      double mono = 1.0;
      for (std::size_t i = 0; i < k.terms[j].alpha.size(); ++i) {
        mono *= std::pow(x[static_cast<Eigen::Index>(i)], k.terms[j].alpha[i]);
      }
      acc += k.terms[j].coefficient * mono * factors[j];
    }
    return acc;
  };
  return Embedding(id, std::move(kp), Provenance::closed_form, kpp, Provenance::closed_form);
}

// ---- dispatch helpers ----

Embedding numeric_embedding(const Kernel& k, const Measure& m, const OracleOptions& opts) {
  oracle_method(m);  // throws UnsupportedPair for measures the oracle cannot handle
  auto kp_kernel = k.shared_from_this();
  auto kp_measure = m.shared_from_this();
  ScalarField kp = [kp_kernel, kp_measure, opts](const VectorRef& x) {
    return estimate_kp(*kp_kernel, *kp_measure, x, opts).value;
  };
  std::function<double()> kpp = [kp_kernel, kp_measure, opts] {
    return estimate_kpp(*kp_kernel, *kp_measure, opts).value;
  };
  return Embedding(pair_id(k, m), std::move(kp), Provenance::numeric_fallback, std::move(kpp),
                   Provenance::numeric_fallback);
}

// K_PP as the one-dimensional integral of a closed-form K_P.
std::function<double()> kpp_from_kp(const ScalarField& kp, const Measure& m, const OracleOptions& opts) {
  auto mp = m.shared_from_this();
  return [kp, mp, opts] { return integrate(kp, *mp, opts).value; };
}

Embedding empirical_embedding(const Kernel& k, const EmpiricalMeasure& e, const std::string& id) {
  auto kp_kernel = k.shared_from_this();
  const PointSet pts = e.points;
  const Vector w = e.weights;
  ScalarField kp = [kp_kernel, pts, w](const VectorRef& x) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i) acc += w[i] * (*kp_kernel)(x, pts.col(i));
    return acc;
  };
  std::function<double()> kpp = [kp_kernel, pts, w] {
    const auto n = static_cast<std::size_t>(pts.cols());
    return parallel::chunked_sum(n * n, [&](std::size_t idx) {
      const auto i = static_cast<Eigen::Index>(idx / n);
      const auto j = static_cast<Eigen::Index>(idx % n);
      return w[i] * w[j] * (*kp_kernel)(pts.col(i), pts.col(j));
    });
  };
  return Embedding(id, std::move(kp), Provenance::closed_form, std::move(kpp), Provenance::closed_form);
}

// Sub-measure on a set of coordinates when the measure factorises across the
// kernel's blocks.
std::optional<std::vector<MeasurePtr>> split_measure(const Measure& m, const std::vector<std::vector<int>>& blocks) {
  std::vector<MeasurePtr> out;
  if (const auto* box = std::get_if<UniformBox>(&m.params())) {
    for (const auto& b : blocks) {
      Vector lo(static_cast<Eigen::Index>(b.size())), hi(static_cast<Eigen::Index>(b.size()));
      for (std::size_t i = 0; i < b.size(); ++i) {
        lo[static_cast<Eigen::Index>(i)] = box->lower[b[i]];
        hi[static_cast<Eigen::Index>(i)] = box->upper[b[i]];
      }
      out.push_back(Measure::uniform_box(lo, hi));
    }
    return out;
  }
  if (const auto* g = std::get_if<GaussianMeasure>(&m.params())) {
    std::vector<int> owner(static_cast<std::size_t>(g->mean.size()), -1);
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      for (int c : blocks[j]) owner[static_cast<std::size_t>(c)] = static_cast<int>(j);
    }
    for (Eigen::Index i = 0; i < g->cov.rows(); ++i) {
      for (Eigen::Index j = 0; j < g->cov.cols(); ++j) {
        if (owner[static_cast<std::size_t>(i)] != owner[static_cast<std::size_t>(j)] && g->cov(i, j) != 0.0) {
          return std::nullopt;
        }
      }
    }
    for (const auto& b : blocks) {
      const auto n = static_cast<Eigen::Index>(b.size());
      Vector mu(n);
      Matrix cov(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        mu[i] = g->mean[b[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = g->cov(b[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
      }
      out.push_back(Measure::gaussian(mu, cov));
    }
    return out;
  }
  if (const auto* p = std::get_if<ProductMeasure>(&m.params())) {
    if (p->factors.size() != blocks.size()) return std::nullopt;
    std::vector<std::vector<int>> spans;
    int offset = 0;
    for (const auto& f : p->factors) {
      std::vector<int> span(static_cast<std::size_t>(f->dim()));
      for (int i = 0; i < f->dim(); ++i) span[static_cast<std::size_t>(i)] = offset + i;
      offset += f->dim();
      spans.push_back(std::move(span));
    }
    std::vector<bool> used(spans.size(), false);
    for (const auto& b : blocks) {
      bool found = false;
      for (std::size_t f = 0; f < spans.size() && !found; ++f) {
        if (!used[f] && spans[f] == b) {
          used[f] = true;
          found = true;
          out.push_back(p->factors[f]);
        }
      }
      if (!found) return std::nullopt;
    }
    return out;
  }
  return std::nullopt;
}

std::optional<Embedding> closed_form_pair(const Kernel& k, const Measure& m, const OracleOptions& fb) {
  const auto* box = std::get_if<UniformBox>(&m.params());
  const auto* gm = std::get_if<GaussianMeasure>(&m.params());
  const bool box1 = box != nullptr && box->lower.size() == 1;
  const bool gauss1 = gm != nullptr && gm->mean.size() == 1;

  switch (k.family()) {
    case KernelFamily::gaussian: {
      const auto& g = k.as<GaussianKernel>();
      if (box != nullptr && g.diagonal) return gauss_uniform(g.lengthscales, box->lower, box->upper);
      if (gm != nullptr) return gauss_gauss(g.lambda, gm->mean, gm->cov);
      break;
    }
    case KernelFamily::matern: {
      const auto& mk = k.as<MaternKernel>();
      if (box1) return matern_uniform_special(mk.n, mk.lengthscale, box->lower[0], box->upper[0]);
      if (gauss1 && mk.n <= 2) return matern_gauss_kp(mk.n, mk.lengthscale, gm->mean[0], std::sqrt(gm->cov(0, 0)), fb);
      break;
    }
    case KernelFamily::wendland: {
      const auto& w = k.as<WendlandKernel>();
      if (box1 && w.order == 0) return wendland0_uniform(w.lengthscale, box->lower[0], box->upper[0]);
      if (gauss1 && w.order <= 2) {
        return wendland_gauss_kp(w.order, w.lengthscale, gm->mean[0], std::sqrt(gm->cov(0, 0)), fb);
      }
      break;
    }
    case KernelFamily::fbm: {
      const auto& f = k.as<FbmKernel>();
      if (box1) {
        require(box->lower[0] >= f.lower && box->upper[0] <= f.upper,
                "fbm/uniform_box: the measure's interval must lie inside the kernel's domain");
        return fbm_uniform(f.hurst, box->lower[0], box->upper[0]);
      }
      break;
    }
    case KernelFamily::power_series: {
      const auto& p = k.as<PowerSeriesKernel>();
      if (box != nullptr) return powerseries_uniform(p, box->lower, box->upper);
      if (gm != nullptr && gm->diagonal && gm->centered()) {
        return powerseries_gauss(p, gm->cov.diagonal().cwiseSqrt());
      }
      break;
    }
    case KernelFamily::sphere_sobolev32:
    case KernelFamily::sphere_smooth:
      if (m.family() == MeasureFamily::sphere_uniform && m.as<SphereUniform>().dim == 2) {
        return sphere_embed(k.family() == KernelFamily::sphere_smooth ? SphereKernelKind::smooth
                                                                       : SphereKernelKind::sobolev32);
      }
      break;
    case KernelFamily::periodic_sobolev: {
      const int r = k.as<PeriodicSobolevKernel>().r;
      if (box1 && box->lower[0] == 0.0 && box->upper[0] == 1.0) return periodic_sobolev_embed(r);
      if (m.family() == MeasureFamily::sphere_uniform && m.as<SphereUniform>().dim == 1) {
        Embedding e = periodic_sobolev_embed(r);
        return Embedding("periodic_sobolev/sphere_uniform", e.kp_function(), Provenance::closed_form, 1.0,
                         Provenance::closed_form);
      }
      break;
    }
    default:
      break;
  }
  return std::nullopt;
}

// psi_# P, collapsing psi_# (phi_# Q) to Q when psi undoes phi.
MeasurePtr pushforward_through(const Transform& psi, const Measure& m) {
  if (const auto* p = std::get_if<PushforwardMeasure>(&m.params())) {
    if (psi.is_inverse_of(p->map)) return p->base;
  }
  if (psi.name() == "identity") return m.shared_from_this();
  if (psi.name() == "normal_cdf" && m.family() == MeasureFamily::gaussian && m.dim() == 1) {
    const auto& g = m.as<GaussianMeasure>();
    if (g.mean[0] == 0.0 && g.cov(0, 0) == 1.0) return Measure::uniform_box(Vector::Zero(1), Vector::Ones(1));
  }
  if (psi.name() == "normal_quantile" && m.family() == MeasureFamily::uniform_box && m.dim() == 1) {
    const auto& u = m.as<UniformBox>();
    if (u.lower[0] == 0.0 && u.upper[0] == 1.0) return Measure::gaussian_diag(Vector::Zero(1), Vector::Ones(1));
  }
  return Measure::pushforward(m.shared_from_this(), psi);
}

}  // namespace

std::string pair_id(const Kernel& kernel, const Measure& measure) { return id_of(kernel.family(), measure.family()); }

// ---------------------------------------------------------------- Gaussian

Embedding gauss_uniform(const Vector& ell, const Vector& lower, const Vector& upper) {
  const Eigen::Index d = ell.size();
  require(d >= 1 && lower.size() == d && upper.size() == d, "gauss_uniform: dimension mismatch");
  for (Eigen::Index i = 0; i < d; ++i) {
    require(ell[i] > 0.0, "gauss_uniform: lengthscales must be positive");
    require(upper[i] > lower[i], "gauss_uniform: need b_i > a_i");
  }
  double kpp = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double r = upper[i] - lower[i];
    const double l = ell[i];
    const double bracket = l * kSqrt2 / kSqrtPi * std::expm1(-r * r / (2.0 * l * l)) + r * erf(r / (l * kSqrt2));
    kpp *= kSqrt2Pi * l / (r * r) * bracket;
  }
  ScalarField kp = [ell, lower, upper](const VectorRef& x) {
    require(x.size() == ell.size(), "gauss_uniform: dimension mismatch");
    double acc = 1.0;
    for (Eigen::Index i = 0; i < ell.size(); ++i) {
      const double r = upper[i] - lower[i];
      const double s = ell[i] * kSqrt2;
      acc *= std::sqrt(std::numbers::pi / 2.0) * ell[i] / r * erf_diff((upper[i] - x[i]) / s, (lower[i] - x[i]) / s);
    }
    return acc;
  };
  return Embedding("gaussian/uniform_box", std::move(kp), Provenance::closed_form, kpp, Provenance::closed_form);
}

Embedding gauss_gauss(const Matrix& lambda, const Vector& mu, const Matrix& sigma) {
  const Eigen::Index d = mu.size();
  require(lambda.rows() == d && lambda.cols() == d && sigma.rows() == d && sigma.cols() == d,
          "gauss_gauss: dimension mismatch");
  if (is_diagonal(lambda) && is_diagonal(sigma)) {
    const Vector l2 = lambda.diagonal();
    const Vector s2 = sigma.diagonal();
    double kpp = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      require(l2[i] > 0.0 && s2[i] > 0.0, "gauss_gauss: variances and lengthscales must be positive");
      kpp *= std::sqrt(l2[i]) / std::sqrt(l2[i] + 2.0 * s2[i]);
    }
    ScalarField kp = [l2, s2, mu](const VectorRef& x) {
      require(x.size() == mu.size(), "gauss_gauss: dimension mismatch");
      double acc = 1.0;
      for (Eigen::Index i = 0; i < mu.size(); ++i) {
        const double t = l2[i] + s2[i];
        const double dx = x[i] - mu[i];
        acc *= std::sqrt(l2[i] / t) * std::exp(-dx * dx / (2.0 * t));
      }
      return acc;
    };
    return Embedding("gaussian/gaussian", std::move(kp), Provenance::closed_form, kpp, Provenance::closed_form);
  }
  const double ld_lambda = log_det_spd(lambda, "gauss_gauss");
  const Matrix sum = lambda + sigma;
  const Eigen::LLT<Matrix> llt(sum);
  require(llt.info() == Eigen::Success, "gauss_gauss: Lambda + Sigma is not positive definite");
  const double ld_sum = log_det_spd(sum, "gauss_gauss");
  const double ld_two = log_det_spd(lambda + 2.0 * sigma, "gauss_gauss");
  const double scale = std::exp(-0.5 * (ld_sum - ld_lambda));
  const double kpp = std::exp(0.5 * (ld_lambda - ld_two));
  const Matrix L = llt.matrixL();
  ScalarField kp = [L, mu, scale](const VectorRef& x) {
    require(x.size() == mu.size(), "gauss_gauss: dimension mismatch");
    const Vector z = L.triangularView<Eigen::Lower>().solve(x - mu);
    return scale * std::exp(-0.5 * z.squaredNorm());
  };
  return Embedding("gaussian/gaussian", std::move(kp), Provenance::closed_form, kpp, Provenance::closed_form);
}

double gauss_cross_kpq(const Matrix& lambda, const Vector& mu_p, const Matrix& sigma_p, const Vector& mu_q,
                       const Matrix& sigma_q) {
  const Eigen::Index d = mu_p.size();
  require(mu_q.size() == d && lambda.rows() == d && sigma_p.rows() == d && sigma_q.rows() == d,
          "gauss_cross_kpq: dimension mismatch");
  const Matrix total = lambda + sigma_p + sigma_q;
  const Eigen::LLT<Matrix> llt(total);
  require(llt.info() == Eigen::Success, "gauss_cross_kpq: Lambda + Sigma_P + Sigma_Q is not positive definite");
  const Vector z = llt.matrixL().solve(mu_p - mu_q);
  const double ld_total = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double ld_lambda = log_det_spd(lambda, "gauss_cross_kpq");
  return std::exp(0.5 * (ld_lambda - ld_total) - 0.5 * z.squaredNorm());
}

// ---------------------------------------------------------------- Matern

MaternUniformCoefficients::MaternUniformCoefficients(int n_, double lengthscale, double r)
    : n(n_), alpha(lengthscale / std::sqrt(2.0 * n_ + 1.0)), rho(r / alpha) {
  require(n >= 0 && n <= 3, "matern: n must be in 0..3");
  require(lengthscale > 0.0, "matern: lengthscale must be positive");
  c.resize(static_cast<std::size_t>(n) + 1);
  for (int m = 0; m <= n; ++m) {
    double acc = 0.0;
    for (int i = 0; i <= n - m; ++i) {
      acc += specfun::factorial(n + i) / specfun::factorial(i) * std::ldexp(1.0, n - i);
    }
    c[static_cast<std::size_t>(m)] = acc / specfun::factorial(m);
  }
}

double MaternUniformCoefficients::Q(double z) const {
  double poly = 0.0;
  for (int m = n; m >= 0; --m) poly = poly * z + c[static_cast<std::size_t>(m)];
  return std::exp(-z) * poly;
}

double MaternUniformCoefficients::c0_minus_Q(double z) const {
  double poly = 0.0;  // sum_{m >= 1} c_m z^{m-1}
  for (int m = n; m >= 1; --m) poly = poly * z + c[static_cast<std::size_t>(m)];
  return -c[0] * std::expm1(-z) - std::exp(-z) * z * poly;
}

MaternGaussianShifts::MaternGaussianShifts(double ell, double mu, double sigma)
    : mu1(mu - std::sqrt(3.0) * sigma * sigma / ell),
      mu2(mu + std::sqrt(3.0) * sigma * sigma / ell),
      mu3(mu - std::sqrt(5.0) * sigma * sigma / ell),
      mu4(mu + std::sqrt(5.0) * sigma * sigma / ell),
      s(kSqrt2 * sigma) {}

Embedding matern_uniform_general(int n, double ell, double a, double b) {
  check_interval(a, b, "matern_uniform_general");
  const double r = b - a;
  const MaternUniformCoefficients coef(n, ell, r);
  const double scale = specfun::factorial(n) / specfun::factorial(2 * n);
  double sum = 0.0;
  for (int m = 0; m <= n; ++m) {
    sum += coef.c[static_cast<std::size_t>(m)] * specfun::lower_incomplete_gamma_int(m, coef.rho);
  }
  const double kpp = 2.0 * coef.alpha * coef.alpha / (r * r) * scale * (coef.rho * coef.c[0] - sum);
  ScalarField kp = [coef, scale, a, b](const VectorRef& x) {
    auto G = [&](double z) { return scale * coef.c0_minus_Q(z); };
    auto Q = [&](double z) { return scale * coef.Q(z); };
    return matern_uniform_kp(G, Q, coef.alpha, a, b, scalar1(x));
  };
  return Embedding("matern/uniform_box", std::move(kp), Provenance::closed_form, kpp, Provenance::closed_form);
}

Embedding matern_uniform_special(int n, double ell, double a, double b) {
  check_interval(a, b, "matern_uniform_special");
  require(n >= 0 && n <= 3, "matern: n must be in 0..3");
  require(ell > 0.0, "matern: lengthscale must be positive");
  const double alpha = ell / std::sqrt(2.0 * n + 1.0);
  const double kpp = matern_special_kpp(n, (b - a) / alpha);
  ScalarField kp = [n, alpha, a, b](const VectorRef& x) {
    auto G = [n](double z) { return matern_special_G(n, z); };
    auto Q = [n](double z) { return matern_special_tail(n, z); };
    return matern_uniform_kp(G, Q, alpha, a, b, scalar1(x));
  };
  return Embedding("matern/uniform_box", std::move(kp), Provenance::closed_form, kpp, Provenance::closed_form);
}

double matern_gauss_kp_value(int n, double ell, double mu, double sigma, double x) {
  require(ell > 0.0 && sigma > 0.0, "matern/gaussian: lengthscale and sigma must be positive");
  const double s2 = sigma * sigma;
  const double l2 = ell * ell;
  const MaternGaussianShifts sh(ell, mu, sigma);
  switch (n) {
    case 0: {
      const double a1 = (s2 + 2.0 * ell * (x - mu)) / (2.0 * l2);
      const double a2 = (s2 - 2.0 * ell * (x - mu)) / (2.0 * l2);
      return exp_times_normal_cdf(a1, (mu - s2 / ell - x) / sigma) +
             exp_times_normal_cdf(a2, (x - mu - s2 / ell) / sigma);
    }
    case 1: {
      const double r3 = std::sqrt(3.0);
      const double a1 = (3.0 * s2 + 2.0 * r3 * ell * (x - mu)) / (2.0 * l2);
      const double a2 = (3.0 * s2 - 2.0 * r3 * ell * (x - mu)) / (2.0 * l2);
      const double b1 = (sh.mu1 - x) / sigma;
      const double b2 = (x - sh.mu2) / sigma;
      const double c = std::sqrt(3.0 * s2 / (2.0 * std::numbers::pi * l2));
      const double t1 = (1.0 - r3 * (x - sh.mu1) / ell) * exp_times_normal_cdf(a1, b1) + c * std::exp(a1 - 0.5 * b1 * b1);
      const double t2 = (1.0 + r3 * (x - sh.mu2) / ell) * exp_times_normal_cdf(a2, b2) + c * std::exp(a2 - 0.5 * b2 * b2);
      return t1 + t2;
    }
    case 2: {
      const double r5 = std::sqrt(5.0);
      const double a1 = (5.0 * s2 + 2.0 * r5 * ell * (x - mu)) / (2.0 * l2);
      const double a2 = (5.0 * s2 - 2.0 * r5 * ell * (x - mu)) / (2.0 * l2);
      const double b1 = (sh.mu3 - x) / sigma;
      const double b2 = (x - sh.mu4) / sigma;
      const double g = sigma / kSqrt2Pi;
      const double d3 = x - sh.mu3;
      const double d4 = x - sh.mu4;
      const double p1 = 1.0 - r5 * d3 / ell + 5.0 * (d3 * d3 + s2) / (3.0 * l2);
      const double p2 = 1.0 + r5 * d4 / ell + 5.0 * (d4 * d4 + s2) / (3.0 * l2);
      const double q1 = (r5 / ell + 5.0 * (sh.mu3 - x) / (3.0 * l2)) * g;
      const double q2 = (r5 / ell + 5.0 * (x - sh.mu4) / (3.0 * l2)) * g;
      const double t1 = p1 * exp_times_normal_cdf(a1, b1) + q1 * std::exp(a1 - 0.5 * b1 * b1);
      const double t2 = p2 * exp_times_normal_cdf(a2, b2) + q2 * std::exp(a2 - 0.5 * b2 * b2);
      return t1 + t2;
    }
    default:
      break;
  }
  throw InvalidArgument("matern/gaussian: closed form only for nu in {1/2, 3/2, 5/2}");
}

Embedding matern_gauss_kp(int n, double ell, double mu, double sigma, const OracleOptions& fallback) {
  require(n >= 0 && n <= 2, "matern/gaussian: closed form only for nu in {1/2, 3/2, 5/2}");
  require(ell > 0.0 && sigma > 0.0, "matern/gaussian: lengthscale and sigma must be positive");
  ScalarField kp = [n, ell, mu, sigma](const VectorRef& x) { return matern_gauss_kp_value(n, ell, mu, sigma, scalar1(x)); };
  const MeasurePtr p = Measure::gaussian_diag(Vector::Constant(1, mu), Vector::Constant(1, sigma * sigma));
  return Embedding("matern/gaussian", kp, Provenance::closed_form, kpp_from_kp(kp, *p, fallback),
                   Provenance::numeric_fallback);
}

// ---------------------------------------------------------------- Wendland

double wendland0_uniform_kp(double ell, double a, double b, double x) {
  const double r = b - a;
  if (x >= a && x <= b) {
    // the four printed branches
    if (b >= x + ell && a + ell < x) return ell / r;
    if (b >= x + ell && a + ell >= x) return (2.0 * x * (a + ell) + ell * ell - a * a - 2.0 * a * ell - x * x) / (2.0 * r * ell);
    if (b < x + ell && a + ell < x) return (2.0 * b * (ell + x) + ell * ell - b * b - 2.0 * ell * x - x * x) / (2.0 * r * ell);
    return (2.0 * (b * ell + b * x + a * x) - a * a - b * b - 2.0 * (a * ell + x * x)) / (2.0 * r * ell);
  }
  const double lo = std::max(a, x - ell);
  const double hi = std::min(b, x + ell);
  if (hi <= lo) return 0.0;
  return wendland0_piece(ell, x, lo, hi) / r;
}

double wendland0_uniform_kpp(double ell, double r) {
  require(ell > 0.0 && r > 0.0, "wendland0_uniform: lengthscale and width must be positive");
  if (r == 2.0 * ell) return 5.0 / 12.0;
  if (ell < r) return ell * (3.0 * r - ell) / (3.0 * r * r);
  return 1.0 - r / (3.0 * ell);
}

Embedding wendland0_uniform(double ell, double a, double b) {
  check_interval(a, b, "wendland0_uniform");
  require(ell > 0.0, "wendland0_uniform: lengthscale must be positive");
  ScalarField kp = [ell, a, b](const VectorRef& x) { return wendland0_uniform_kp(ell, a, b, scalar1(x)); };
  return Embedding("wendland/uniform_box", std::move(kp), Provenance::closed_form, wendland0_uniform_kpp(ell, b - a),
                   Provenance::closed_form);
}

double wendland_gauss_kp_value(int order, double ell, double sigma, double x) {
  require(ell > 0.0 && sigma > 0.0, "wendland/gaussian: lengthscale and sigma must be positive");
  return wendland_gauss_value(order, ell, sigma, x);
}

Embedding wendland_gauss_kp(int order, double ell, double mu, double sigma, const OracleOptions& fallback) {
  require(order == 0 || order == 2, "wendland/gaussian: closed form only for orders 0 and 2");
  require(ell > 0.0 && sigma > 0.0, "wendland/gaussian: lengthscale and sigma must be positive");
  ScalarField kp = [order, ell, mu, sigma](const VectorRef& x) {
    return wendland_gauss_value(order, ell, sigma, scalar1(x) - mu);
  };
  const MeasurePtr p = Measure::gaussian_diag(Vector::Constant(1, mu), Vector::Constant(1, sigma * sigma));
  return Embedding("wendland/gaussian", kp, Provenance::closed_form, kpp_from_kp(kp, *p, fallback),
                   Provenance::numeric_fallback);
}

// ---------------------------------------------------------------- fBm

Embedding fbm_uniform(double hurst, double a, double b) {
  require(hurst > 0.0 && hurst < 1.0, "fbm_uniform: Hurst index must lie in (0, 1)");
  require(a >= 0.0 && b > a, "fbm_uniform: need b > a >= 0");
  const double h = 2.0 * hurst + 1.0;
  const double r = b - a;
  const double bh_ah = std::pow(b, h) - std::pow(a, h);
  const double kpp = ((h + 1.0) * bh_ah - std::pow(r, h)) / (h * (h + 1.0) * r);
  ScalarField kp = [h, a, b, r, bh_ah](const VectorRef& xv) {
    const double x = scalar1(xv);
    require(x >= a && x <= b, "fbm/uniform_box: evaluation point outside [a, b]");
    return (bh_ah - std::pow(b - x, h) - std::pow(x - a, h)) / (2.0 * h * r) + std::pow(x, h - 1.0) / 2.0;
  };
  return Embedding("fbm/uniform_box", std::move(kp), Provenance::closed_form, kpp, Provenance::closed_form);
}

// ---------------------------------------------------------------- power series

Embedding powerseries_uniform(const PowerSeriesKernel& k, const Vector& lower, const Vector& upper) {
  require(lower.size() == k.dim && upper.size() == k.dim, "powerseries_uniform: dimension mismatch");
  for (Eigen::Index i = 0; i < lower.size(); ++i) require(upper[i] > lower[i], "powerseries_uniform: need b_i > a_i");
  auto moment = [&](std::size_t i, int alpha) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double b = upper[ii];
    const double a = lower[ii];
    return (std::pow(b, alpha + 1) - std::pow(a, alpha + 1)) / ((alpha + 1.0) * (b - a));
  };
  return powerseries_embed(k, moment, "power_series/uniform_box");
}

Embedding powerseries_gauss(const PowerSeriesKernel& k, const Vector& sigmas) {
  require(sigmas.size() == k.dim, "powerseries_gauss: dimension mismatch");
  for (Eigen::Index i = 0; i < sigmas.size(); ++i) require(sigmas[i] > 0.0, "powerseries_gauss: sigma must be positive");
  auto moment = [&](std::size_t i, int alpha) {
    if (alpha % 2 != 0) return 0.0;
    return std::pow(sigmas[static_cast<Eigen::Index>(i)], alpha) *
           static_cast<double>(specfun::double_factorial(alpha - 1));
  };
  return powerseries_embed(k, moment, "power_series/gaussian");
}

// ---------------------------------------------------------------- constants

Embedding sphere_embed(SphereKernelKind kind) {
  const double c = kind == SphereKernelKind::sobolev32 ? 2.0 / 3.0 : -std::expm1(-48.0);
  const std::string id = kind == SphereKernelKind::sobolev32 ? "sphere_sobolev32/sphere_uniform"
                                                             : "sphere_smooth/sphere_uniform";
  ScalarField kp = [c](const VectorRef& x) {
    require(x.size() == 3, "sphere embedding: points must lie on S^2 in R^3");
    return c;
  };
  return Embedding(id, std::move(kp), Provenance::closed_form, c, Provenance::closed_form);
}

Embedding periodic_sobolev_embed(int r) {
  require(r >= 1 && r <= 6, "periodic_sobolev_embed: r must be in 1..6");
  ScalarField kp = [](const VectorRef&) { return 1.0; };
  return Embedding("periodic_sobolev/uniform_box", std::move(kp), Provenance::closed_form, 1.0,
                   Provenance::closed_form);
}

// ---------------------------------------------------------------- dispatch

Embedding embed(const Kernel& k, const Measure& m, const OracleOptions& fb) {
  const int kd = k.input_dim();
  require(kd < 0 || kd == m.dim(),
          "embed: kernel input dimension " + std::to_string(kd) + " does not match measure dimension " +
              std::to_string(m.dim()));

  if (const auto* p = std::get_if<PushforwardMeasure>(&m.params())) {
    const MeasurePtr simplified = pushforward_through(p->map, *p->base);
    if (simplified->family() != MeasureFamily::pushforward) return embed(k, *simplified, fb);
  }

  switch (k.family()) {
    case KernelFamily::matrix_valued:
      throw InvalidArgument("embed: matrix-valued kernels go through embed_matrix");
    case KernelFamily::stein: {
      const Embedding e = stein_embed(k.as<SteinKernel>());
      return Embedding(pair_id(k, m), e.kp_function(), Provenance::closed_form, e.kpp(), Provenance::closed_form);
    }
    case KernelFamily::composed: {
      const auto& c = k.as<ComposedKernel>();
      return pushforward_embed(embed(*c.base, *pushforward_through(c.map, m), fb), c.map);
    }
    case KernelFamily::sum: {
      const auto& s = k.as<SumKernel>();
      std::vector<MeasurePtr> comps{m.shared_from_this()};
      std::vector<double> weights{1.0};
      if (const auto* mix = std::get_if<MixtureMeasure>(&m.params())) {
        comps = mix->components;
        weights = mix->weights;
      }
      std::vector<std::vector<Embedding>> table;
      for (const auto& c : comps) {
        std::vector<Embedding> row;
        for (const auto& t : s.terms) row.push_back(embed(*t, *c, fb));
        table.push_back(std::move(row));
      }
      const auto terms = s.terms;
      CrossResolver cross = [table, comps, terms, fb](std::size_t j, std::size_t kk, std::size_t t) {
        const Embedding ek = table[kk][t];
        const MeasurePtr pj = comps[j];
        return CrossTerm{Provenance::numeric_fallback, [ek, pj, fb] { return integrate(ek.kp_function(), *pj, fb).value; }};
      };
      return mixture_embed(table, weights, s.weights, cross);
    }
    case KernelFamily::product: {
      const auto& p = k.as<ProductKernel>();
      std::vector<std::vector<int>> blocks;
      for (const auto& f : p.factors) blocks.push_back(f.coords);
      if (auto parts = split_measure(m, blocks)) {
        std::vector<Embedding> factors;
        for (std::size_t j = 0; j < blocks.size(); ++j) factors.push_back(embed(*p.factors[j].kernel, *(*parts)[j], fb));
        return product_embed(factors, blocks);
      }
      break;
    }
    default:
      break;
  }

  if (const auto* mix = std::get_if<MixtureMeasure>(&m.params())) {
    std::vector<std::vector<Embedding>> table;
    for (const auto& c : mix->components) table.push_back({embed(k, *c, fb)});
    const auto comps = mix->components;
    const auto kernel = k.shared_from_this();
    CrossResolver cross = [table, comps, kernel, fb](std::size_t j, std::size_t kk, std::size_t) {
      const auto* g = std::get_if<GaussianKernel>(&kernel->params());
      const auto* pj = std::get_if<GaussianMeasure>(&comps[j]->params());
      const auto* pk = std::get_if<GaussianMeasure>(&comps[kk]->params());
      if (g != nullptr && pj != nullptr && pk != nullptr) {
        const double v = gauss_cross_kpq(g->lambda, pj->mean, pj->cov, pk->mean, pk->cov);
        return CrossTerm{Provenance::closed_form, [v] { return v; }};
      }
      const Embedding ek = table[kk][0];
      const MeasurePtr mj = comps[j];
      return CrossTerm{Provenance::numeric_fallback, [ek, mj, fb] { return integrate(ek.kp_function(), *mj, fb).value; }};
    };
    Embedding e = mixture_embed(table, mix->weights, {1.0}, cross);
    return Embedding(pair_id(k, m), e.kp_function(), e.kp_provenance(), [e] { return e.kpp(); }, e.kpp_provenance());
  }

  if (m.family() == MeasureFamily::unnormalized_score) {
    throw UnsupportedPair("embed: unnormalized measure '" + m.as<UnnormalizedScoreMeasure>().name +
                          "' pairs only with Stein kernels");
  }
  if (const auto* e = std::get_if<EmpiricalMeasure>(&m.params())) return empirical_embedding(k, *e, pair_id(k, m));
  if (auto closed = closed_form_pair(k, m, fb)) return *closed;
  return numeric_embedding(k, m, fb);
}

MatrixEmbedding embed_matrix(const Kernel& k, const Measure& m, const OracleOptions& fb) {
  if (const auto* mv = std::get_if<MatrixValuedKernel>(&k.params())) {
    return matrix_valued_embed(embed(*mv->base, m, fb), mv->B);
  }
  return MatrixEmbedding(embed(k, m, fb), Matrix::Identity(1, 1));
}

}  // namespace ked
