#pragma once

#include <cmath>
#include <initializer_list>

#include <doctest.h>

#include "ked/types.hpp"

namespace ked::test {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Vector scalar(double x) { return vec({x}); }

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace ked::test

#define CHECK_CLOSE(got, want, tol) CHECK(std::abs((got) - (want)) <= (tol))
#define CHECK_REL(got, want, tol) CHECK(::ked::test::rel_err((got), (want)) <= (tol))
