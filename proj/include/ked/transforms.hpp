#pragma once

#include <functional>
#include <string>

#include "ked/types.hpp"

namespace ked {

// Coordinate-wise invertible map used for change-of-variable constructions.
// Built-in names: identity, normal_cdf, normal_quantile, exp, log.
class Transform {
 public:
  using Fn = std::function<double(double)>;

  Transform(std::string name, Fn forward, std::string inverse_name, Fn inverse);

  static Transform named(const std::string& name);
  static Transform identity() { return named("identity"); }

  const std::string& name() const { return name_; }
  const std::string& inverse_name() const { return inverse_name_; }

  double operator()(double x) const { return forward_(x); }
  Vector operator()(const VectorRef& x) const;

  Transform inverse() const;

  // True when `other` undoes this map (matched by name).
  bool is_inverse_of(const Transform& other) const { return other.inverse_name_ == name_ && inverse_name_ == other.name_; }

 private:
  std::string name_;
  Fn forward_;
  std::string inverse_name_;
  Fn inverse_;
};

}  // namespace ked
