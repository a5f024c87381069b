#include <numbers>

#include "ked/error.hpp"
#include "ked/measures.hpp"
#include "support.hpp"

using namespace ked;
using test::scalar;
using test::vec;

TEST_SUITE("measures") {
  TEST_CASE("densities") {
    const auto box = Measure::uniform_box(vec({0.0, 0.0}), vec({1.0, 1.0}));
    CHECK(box->density(vec({0.3, 0.9})) == 1.0);
    CHECK(box->density(vec({1.3, 0.9})) == 0.0);
    const auto g = Measure::gaussian_diag(scalar(0.0), scalar(1.0));
    CHECK_REL(g->density(scalar(0.0)), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
    const auto mix = Measure::mixture({g, g}, {0.5, 0.5});
    CHECK_REL(mix->density(scalar(0.0)), g->density(scalar(0.0)), 1e-15);
    CHECK_REL(mix->density(scalar(1.3)), g->density(scalar(1.3)), 1e-15);
    Matrix cov(2, 2);
    cov << 2.0, 0.6, 0.6, 1.0;
    const auto g2 = Measure::gaussian(vec({1.0, -1.0}), cov);
    const Vector d = vec({0.5, 0.2});
    const double want = std::exp(-0.5 * d.dot(cov.inverse() * d)) / (2.0 * std::numbers::pi * std::sqrt(cov.determinant()));
    CHECK_REL(g2->density(vec({1.5, -0.8})), want, 1e-14);
  }

  TEST_CASE("uniform sampling mean within the CLT bound") {
    const auto box = Measure::uniform_box(scalar(0.0), scalar(1.0));
    const PointSet s = box->sample(100000, 42);
    CHECK(std::abs(s.mean() - 0.5) <= 4.0 / std::sqrt(12.0 * 1e5));
  }

  TEST_CASE("sphere samples lie on the sphere") {
    const PointSet s = Measure::sphere_uniform(2)->sample(10000, 7);
    CHECK(s.rows() == 3);
    CHECK((s.colwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-12);
    const PointSet c = Measure::sphere_uniform(1)->sample(100, 7);
    CHECK(c.rows() == 2);
  }

  TEST_CASE("sampling is deterministic in the seed") {
    const auto mix = Measure::mixture({Measure::gaussian_diag(scalar(-1.0), scalar(1.0)),
                                       Measure::uniform_box(scalar(2.0), scalar(3.0))},
                                      {0.3, 0.7});
    const PointSet a = mix->sample(500, 9);
    const PointSet b = mix->sample(500, 9);
    CHECK((a.array() == b.array()).all());
    const PointSet c = mix->sample(500, 10);
    CHECK((a.array() != c.array()).any());
  }

  TEST_CASE("gaussian sample moments") {
    Matrix cov(2, 2);
    cov << 1.0, 0.5, 0.5, 2.0;
    const PointSet s = Measure::gaussian(vec({1.0, 2.0}), cov)->sample(200000, 1);
    const Vector mean = s.rowwise().mean();
    CHECK((mean - vec({1.0, 2.0})).cwiseAbs().maxCoeff() <= 0.02);
    const Matrix centred = s.colwise() - mean;
    const Matrix emp = centred * centred.transpose() / static_cast<double>(s.cols() - 1);
    CHECK((emp - cov).cwiseAbs().maxCoeff() <= 0.03);
  }

  TEST_CASE("scores") {
    const auto g = Measure::gaussian_diag(vec({0.0, 0.0}), vec({1.0, 1.0}));
    const Vector x = vec({0.3, -1.2});
    CHECK(((g->score(x) + x).cwiseAbs().maxCoeff()) <= 1e-15);
    CHECK(g->score(vec({0.0, 0.0})).norm() == 0.0);
    const auto mix = Measure::mixture({Measure::gaussian_diag(scalar(-1.0), scalar(1.0)),
                                       Measure::gaussian_diag(scalar(1.0), scalar(1.0))},
                                      {0.5, 0.5});
    CHECK_CLOSE(mix->score(scalar(0.0))[0], 0.0, 1e-15);
    const double h = 1e-6;
    for (double t : {-2.0, 0.4, 1.7}) {
      const double fd = (mix->log_density(scalar(t + h)) - mix->log_density(scalar(t - h))) / (2 * h);
      CHECK_CLOSE(mix->score(scalar(t))[0], fd, 1e-7);
    }
    const auto q = Measure::unnormalized_named("quartic", 2);
    CHECK((q->score(x) + x.array().cube().matrix()).norm() <= 1e-15);
    CHECK_THROWS_AS(Measure::uniform_box(scalar(0.0), scalar(1.0))->score(scalar(0.5)), InvalidArgument);
  }

  TEST_CASE("capabilities") {
    CHECK_FALSE(Measure::unnormalized_named("double_well", 1)->sampleable());
    CHECK(Measure::pushforward(Measure::uniform_box(scalar(0.1), scalar(0.9)), Transform::named("normal_quantile"))->sampleable());
    CHECK(Measure::sphere_uniform(2)->dim() == 3);
    const auto p = Measure::product({Measure::uniform_box(scalar(0.0), scalar(1.0)), Measure::gaussian_diag(vec({0.0, 0.0}), vec({1.0, 1.0}))});
    CHECK(p->dim() == 3);
    CHECK_REL(p->density(vec({0.5, 0.0, 0.0})), 1.0 / (2.0 * std::numbers::pi), 1e-15);
  }

  TEST_CASE("validation") {
    CHECK_THROWS_AS(Measure::uniform_box(scalar(1.0), scalar(0.0)), InvalidArgument);
    CHECK_THROWS_AS(Measure::gaussian_diag(scalar(0.0), scalar(-1.0)), InvalidArgument);
    CHECK_THROWS_AS(Measure::mixture({Measure::sphere_uniform(2)}, {0.5}), InvalidArgument);
    CHECK_THROWS_AS(Measure::empirical(PointSet::Zero(1, 2), vec({0.5, 0.6})), InvalidArgument);
    CHECK_THROWS_AS(Measure::unnormalized_named("banana", 1), InvalidArgument);
    CHECK_THROWS_AS(Measure::sphere_uniform(3), InvalidArgument);
  }
}
