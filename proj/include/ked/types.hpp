#pragma once

#include <Eigen/Dense>
#include <functional>

namespace ked {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// Points are stored column-wise: a d x n matrix holds n points in R^d.
using PointSet = Eigen::MatrixXd;

using ScalarField = std::function<double(const VectorRef&)>;
using ScoreFn = std::function<Vector(const VectorRef&)>;

}  // namespace ked
