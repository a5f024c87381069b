#include "ked/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ked/error.hpp"
#include "ked/rng.hpp"
#include "ked/rules.hpp"

namespace ked {

namespace {

using parallel::Execution;

// Half-width of the window, in standard deviations, used when a 1-d gaussian
// integral is split at breakpoints.
constexpr double kGaussianWindow = 40.0;

// 2-d nested K_PP caps the per-axis node count to keep the cost at n^4.
constexpr std::size_t kNestedNodes2d = 32;

struct Rule1d {
  std::vector<double> nodes;
  std::vector<double> weights;
};

void append(Rule1d& out, const QuadratureRule& r) {
  out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
  out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
}

// Piecewise rule on [a, b]; weights integrate against dy (not normalised).
Rule1d piecewise_rule(double a, double b, std::vector<double> breaks, int n, bool graded) {
  std::vector<double> cuts{a};
  std::sort(breaks.begin(), breaks.end());
  for (double c : breaks) {
    if (c > a && c < b && c > cuts.back()) cuts.push_back(c);
  }
  cuts.push_back(b);
  const bool use_graded = graded || !breaks.empty();
  Rule1d out;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    if (cuts[p + 1] <= cuts[p]) continue;
    append(out, use_graded ? graded_gauss_legendre(n, cuts[p], cuts[p + 1]) : gauss_legendre(n, cuts[p], cuts[p + 1]));
  }
  return out;
}

std::size_t resolve_budget(std::size_t budget, OracleMethod method) {
  require(budget == 0 || budget >= 10, "oracle: budget must be >= 10");
  if (is_deterministic(method)) return budget == 0 ? kDefaultNodes : std::min(budget, kMaxNodes);
  return budget == 0 ? kDefaultSamples : budget;
}

template <class T>
const T* get_if(const Measure& m) {
  return std::get_if<T>(&m.params());
}

OracleEstimate monte_carlo(const ScalarField& f, const Measure& m, std::size_t n, std::uint64_t seed, Execution exec,
                           OracleMethod method) {
  const CounterRng rng(seed);
  const auto mom = parallel::chunked_reduce<parallel::Moments>(
      n, parallel::Moments{}, [&](std::size_t i) { return parallel::Moments{} += f(m.draw(rng, i)); }, exec);
  const double nd = static_cast<double>(n);
  const double mean = mom.sum / nd;
  const double var = std::max(0.0, (mom.sum_sq - nd * mean * mean) / (nd - 1.0));
  return OracleEstimate{mean, std::sqrt(var / nd), method, n, seed};
}

OracleEstimate tensor_box(const ScalarField& f, const UniformBox& box, std::size_t n, const AxisBreaks& breaks,
                          bool graded, Execution exec) {
  const auto d = static_cast<std::size_t>(box.lower.size());
  std::vector<Rule1d> rules(d);
  double volume = 1.0;
  for (std::size_t k = 0; k < d; ++k) {
    const std::vector<double> b = k < breaks.size() ? breaks[k] : std::vector<double>{};
    rules[k] = piecewise_rule(box.lower[k], box.upper[k], b, static_cast<int>(n), graded);
    volume *= box.upper[k] - box.lower[k];
  }
  double value = 0.0;
  if (d == 1) {
    const Rule1d& r = rules[0];
    value = parallel::chunked_sum(
        r.nodes.size(),
        [&](std::size_t i) {
          Vector y(1);
          y[0] = r.nodes[i];
          return r.weights[i] * f(y);
        },
        exec);
  } else {
    const Rule1d& r0 = rules[0];
    const Rule1d& r1 = rules[1];
    const std::size_t n1 = r1.nodes.size();
    value = parallel::chunked_sum(
        r0.nodes.size() * n1,
        [&](std::size_t idx) {
          const std::size_t i = idx / n1;
          const std::size_t j = idx % n1;
          Vector y(2);
          y[0] = r0.nodes[i];
          y[1] = r1.nodes[j];
          return r0.weights[i] * r1.weights[j] * f(y);
        },
        exec);
  }
  return OracleEstimate{value / volume, 0.0, OracleMethod::gauss_legendre, n, 0};
}

OracleEstimate gaussian_1d(const ScalarField& f, const GaussianMeasure& g, std::size_t n, const AxisBreaks& breaks,
                           Execution exec) {
  const double mu = g.mean[0];
  const double sigma = g.chol_lower(0, 0);
  const double lo = mu - kGaussianWindow * sigma;
  const double hi = mu + kGaussianWindow * sigma;
  std::vector<double> inside;
  if (!breaks.empty()) {
    for (double b : breaks[0]) {
      if (b > lo && b < hi) inside.push_back(b);
    }
  }
  if (inside.empty()) {
    const QuadratureRule& r = gauss_hermite(static_cast<int>(n));
    const double value = parallel::chunked_sum(
        r.nodes.size(),
        [&](std::size_t i) {
          Vector y(1);
          y[0] = mu + sigma * r.nodes[i];
          return r.weights[i] * f(y);
        },
        exec);
    return OracleEstimate{value, 0.0, OracleMethod::gauss_hermite, n, 0};
  }
  // Kinks inside the bulk of the mass: split a wide window at the kinks.
  const Rule1d r = piecewise_rule(lo, hi, inside, static_cast<int>(n), false);
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  const double value = parallel::chunked_sum(
      r.nodes.size(),
      [&](std::size_t i) {
        Vector y(1);
        y[0] = r.nodes[i];
        const double z = (r.nodes[i] - mu) / sigma;
        return r.weights[i] * norm * std::exp(-0.5 * z * z) * f(y);
      },
      exec);
  return OracleEstimate{value, 0.0, OracleMethod::gauss_legendre, n, 0};
}

}  // namespace

std::string to_string(OracleMethod m) {
  switch (m) {
    case OracleMethod::gauss_legendre: return "gauss_legendre";
    case OracleMethod::gauss_hermite: return "gauss_hermite";
    case OracleMethod::monte_carlo: return "monte_carlo";
    case OracleMethod::sphere_mc: return "sphere_mc";
    case OracleMethod::exact_sum: return "exact_sum";
  }
  return "unknown";
}

bool is_deterministic(OracleMethod m) {
  return m == OracleMethod::gauss_legendre || m == OracleMethod::gauss_hermite || m == OracleMethod::exact_sum;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id) { return CounterRng(seed, id + 1).bits(0); }

OracleMethod oracle_method(const Measure& m) {
  switch (m.family()) {
    case MeasureFamily::uniform_box:
      return m.dim() <= 2 ? OracleMethod::gauss_legendre : OracleMethod::monte_carlo;
    case MeasureFamily::gaussian:
      return m.dim() == 1 ? OracleMethod::gauss_hermite : OracleMethod::monte_carlo;
    case MeasureFamily::sphere_uniform:
      return OracleMethod::sphere_mc;
    case MeasureFamily::empirical:
      return OracleMethod::exact_sum;
    case MeasureFamily::pushforward:
      return oracle_method(*m.as<PushforwardMeasure>().base);
    case MeasureFamily::mixture: {
      const auto& mix = m.as<MixtureMeasure>();
      OracleMethod first = oracle_method(*mix.components.front());
      for (const auto& c : mix.components) {
        const OracleMethod mc = oracle_method(*c);
        if (!is_deterministic(mc)) return mc == OracleMethod::sphere_mc ? mc : OracleMethod::monte_carlo;
      }
      return first;
    }
    case MeasureFamily::product:
      if (!m.sampleable()) break;
      return OracleMethod::monte_carlo;
    case MeasureFamily::unnormalized_score:
      break;
  }
  throw UnsupportedPair("oracle: measure '" + m.name() + "' can be neither sampled nor integrated numerically");
}

AxisBreaks axis_breakpoints(const Kernel& k, const VectorRef& x) {
  if (x.size() == 1) {
    if (k.family() == KernelFamily::sphere_sobolev32 || k.family() == KernelFamily::sphere_smooth) return {};
    return {k.breakpoints_1d(x[0])};
  }
  if (k.family() == KernelFamily::product) {
    const auto& p = k.as<ProductKernel>();
    AxisBreaks out(static_cast<std::size_t>(x.size()));
    for (const auto& f : p.factors) {
      if (f.coords.size() != 1) return {};
      const int c = f.coords.front();
      out[static_cast<std::size_t>(c)] = f.kernel->breakpoints_1d(x[c]);
    }
    return out;
  }
  return {};
}

OracleEstimate integrate(const ScalarField& f, const Measure& m, const OracleOptions& opts, const AxisBreaks& breaks,
                         bool graded) {
  const OracleMethod method = oracle_method(m);
  const std::size_t n = resolve_budget(opts.budget, method);
  switch (m.family()) {
    case MeasureFamily::uniform_box:
      if (method == OracleMethod::gauss_legendre) return tensor_box(f, m.as<UniformBox>(), n, breaks, graded, opts.exec);
      return monte_carlo(f, m, n, opts.seed, opts.exec, method);
    case MeasureFamily::gaussian:
      if (method == OracleMethod::gauss_hermite) return gaussian_1d(f, m.as<GaussianMeasure>(), n, breaks, opts.exec);
      return monte_carlo(f, m, n, opts.seed, opts.exec, method);
    case MeasureFamily::sphere_uniform:
      return monte_carlo(f, m, n, opts.seed, opts.exec, OracleMethod::sphere_mc);
    case MeasureFamily::empirical: {
      const auto& e = m.as<EmpiricalMeasure>();
      const double value = parallel::chunked_sum(
          static_cast<std::size_t>(e.points.cols()),
          [&](std::size_t i) {
            const auto col = static_cast<Eigen::Index>(i);
            return e.weights[col] * f(e.points.col(col));
          },
          opts.exec);
      return OracleEstimate{value, 0.0, OracleMethod::exact_sum, static_cast<std::size_t>(e.points.cols()), 0};
    }
    case MeasureFamily::pushforward: {
      const auto& p = m.as<PushforwardMeasure>();
      // P = phi_# Q: int f dP = int f(phi(y)) dQ(y); kinks move to phi^{-1}(b).
      AxisBreaks mapped;
      const Transform inv = p.map.inverse();
      for (const auto& axis : breaks) {
        std::vector<double> out;
        for (double b : axis) {
          try {
            out.push_back(inv(b));
          } catch (const InvalidArgument&) {
          }
        }
        mapped.push_back(std::move(out));
      }
      const ScalarField g = [&](const VectorRef& y) { return f(p.map(y)); };
      return integrate(g, *p.base, opts, mapped, graded);
    }
    case MeasureFamily::mixture: {
      const auto& mix = m.as<MixtureMeasure>();
      OracleEstimate out{0.0, 0.0, method, n, opts.seed};
      double var = 0.0;
      for (std::size_t j = 0; j < mix.components.size(); ++j) {
        if (mix.weights[j] == 0.0) continue;
        OracleOptions sub = opts;
        sub.seed = derive_seed(opts.seed, j);
        const OracleEstimate e = integrate(f, *mix.components[j], sub, breaks, graded);
        out.value += mix.weights[j] * e.value;
        var += mix.weights[j] * mix.weights[j] * e.std_error * e.std_error;
      }
      out.std_error = std::sqrt(var);
      return out;
    }
    case MeasureFamily::product:
      return monte_carlo(f, m, n, opts.seed, opts.exec, method);
    case MeasureFamily::unnormalized_score:
      break;
  }
  throw UnsupportedPair("oracle: measure '" + m.name() + "' is not supported");
}

OracleEstimate estimate_kp(const Kernel& k, const Measure& m, const VectorRef& x, const OracleOptions& opts) {
  require(k.family() != KernelFamily::matrix_valued, "oracle: estimate the scalar base of a matrix-valued kernel");
  const Vector xv = x;
  const ScalarField f = [&](const VectorRef& y) { return k(xv, y); };
  OracleEstimate e = integrate(f, m, opts, axis_breakpoints(k, xv));
  e.seed = opts.seed;
  return e;
}

OracleEstimate estimate_kpp(const Kernel& k, const Measure& m, const OracleOptions& opts) {
  require(k.family() != KernelFamily::matrix_valued, "oracle: estimate the scalar base of a matrix-valued kernel");
  const OracleMethod method = oracle_method(m);

  if (method == OracleMethod::exact_sum) {
    const auto& e = m.as<EmpiricalMeasure>();
    const auto n = static_cast<std::size_t>(e.points.cols());
    const double value = parallel::chunked_sum(
        n * n,
        [&](std::size_t idx) {
          const auto i = static_cast<Eigen::Index>(idx / n);
          const auto j = static_cast<Eigen::Index>(idx % n);
          return e.weights[i] * e.weights[j] * k(e.points.col(i), e.points.col(j));
        },
        opts.exec);
    return OracleEstimate{value, 0.0, method, n, opts.seed};
  }

  if (is_deterministic(method)) {
    std::size_t n = resolve_budget(opts.budget, method);
    if (m.dim() >= 2) n = std::min(n, kNestedNodes2d);
    OracleOptions inner{n, opts.seed, Execution::serial};
    OracleOptions outer{n, opts.seed, opts.exec};
    const ScalarField kp = [&](const VectorRef& x) { return estimate_kp(k, m, x, inner).value; };
    // K_P bends where a kink of K(x, .) crosses an end of the interval.
    AxisBreaks outer_breaks;
    if (m.family() == MeasureFamily::uniform_box && m.dim() == 1) {
      const auto& box = m.as<UniformBox>();
      const double a = box.lower[0];
      const double b = box.upper[0];
      const double mid = 0.5 * (a + b);
      std::vector<double> cuts;
      for (double bp : k.breakpoints_1d(mid)) {
        for (double c : {a - (bp - mid), b - (bp - mid)}) {
          if (c > a && c < b) cuts.push_back(c);
        }
      }
      outer_breaks.push_back(std::move(cuts));
    }
    OracleEstimate e = integrate(kp, m, outer, outer_breaks, true);
    e.n = n;
    e.seed = opts.seed;
    return e;
  }

  // Off-diagonal U-statistic over m_s samples covering at least `pairs` pairs.
  const std::size_t pairs = resolve_budget(opts.budget, method);
  const auto ms = static_cast<std::size_t>(std::ceil(0.5 * (1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(pairs)))));
  require(ms >= 3, "oracle: U-statistic needs at least three samples");
  const PointSet xs = m.sample(ms, opts.seed);
  std::vector<double> rows(ms, 0.0);
  parallel::for_each_index(
      ms,
      [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < ms; ++j) {
          if (j != i) acc += k(xs.col(static_cast<Eigen::Index>(i)), xs.col(static_cast<Eigen::Index>(j)));
        }
        rows[i] = acc;
      },
      opts.exec);
  double total = 0.0;
  for (double r : rows) total += r;
  const double md = static_cast<double>(ms);
  const double u = total / (md * (md - 1.0));
  // Leave-one-out replicates: removing sample i drops 2 r_i from the pair sum.
  std::vector<double> loo(ms);
  double loo_mean = 0.0;
  for (std::size_t i = 0; i < ms; ++i) {
    loo[i] = (total - 2.0 * rows[i]) / ((md - 1.0) * (md - 2.0));
    loo_mean += loo[i];
  }
  loo_mean /= md;
  double ss = 0.0;
  for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  const double se = std::sqrt((md - 1.0) / md * ss);
  return OracleEstimate{u, se, method, ms * (ms - 1) / 2, opts.seed};
}

double gauss_hermite_expectation(const std::function<double(double)>& f, double mu, double sigma, int n) {
  const QuadratureRule& r = gauss_hermite(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * f(mu + sigma * r.nodes[i]);
  return acc;
}

}  // namespace ked
