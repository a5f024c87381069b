#include "ked/transforms.hpp"

#include <cmath>
#include <utility>

#include "ked/error.hpp"
#include "ked/specfun.hpp"

namespace ked {

Transform::Transform(std::string name, Fn forward, std::string inverse_name, Fn inverse)
    : name_(std::move(name)), forward_(std::move(forward)), inverse_name_(std::move(inverse_name)), inverse_(std::move(inverse)) {}

Transform Transform::named(const std::string& name) {
  auto normal_cdf = [](double x) { return specfun::normal_cdf(x); };
  auto normal_quantile = [](double p) {
    require(p > 0.0 && p < 1.0, "normal_quantile map: argument outside (0, 1)");
    return specfun::normal_quantile(p);
  };
  auto exp_fn = [](double x) { return std::exp(x); };
  auto log_fn = [](double x) {
    require(x > 0.0, "log map: argument must be positive");
    return std::log(x);
  };
  auto id = [](double x) { return x; };

  if (name == "identity") return Transform("identity", id, "identity", id);
  if (name == "normal_cdf") return Transform("normal_cdf", normal_cdf, "normal_quantile", normal_quantile);
  if (name == "normal_quantile") return Transform("normal_quantile", normal_quantile, "normal_cdf", normal_cdf);
  if (name == "exp") return Transform("exp", exp_fn, "log", log_fn);
  if (name == "log") return Transform("log", log_fn, "exp", exp_fn);
  throw InvalidArgument("unknown map '" + name + "'");
}

Vector Transform::operator()(const VectorRef& x) const {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = forward_(x[i]);
  return out;
}

Transform Transform::inverse() const { return Transform(inverse_name_, inverse_, name_, forward_); }

}  // namespace ked
