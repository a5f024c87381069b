#include <algorithm>
#include <random>

#include "ked/dictionary.hpp"
#include "ked/error.hpp"
#include "ked/quadrature.hpp"
#include "support.hpp"

using namespace ked;
using test::scalar;
using test::vec;

namespace {

PointSet line(std::initializer_list<double> xs) {
  PointSet p(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p(0, i++) = x;
  return p;
}

struct Setup {
  KernelPtr kernel = Kernel::gaussian(scalar(1.0));
  MeasurePtr measure = Measure::gaussian_diag(scalar(0.0), scalar(1.0));
  Embedding embedding = embed(*kernel, *measure);
};

}  // namespace

TEST_SUITE("quadrature") {
  TEST_CASE("one node") {
    Setup s;
    const auto p = QuadratureProblem::build(s.kernel, s.embedding, line({0.0}), scalar(1.0));
    const BQPosterior post = bq_posterior(p);
    CHECK_REL(post.mean, 1.0 / std::sqrt(2.0), 1e-15);
    CHECK_CLOSE(post.variance, 1.0 / std::sqrt(3.0) - 0.5, 1e-15);
    CHECK(post.jitter_applied == 0.0);
    const auto q = QuadratureProblem::build(s.kernel, s.embedding, line({0.8}));
    CHECK_REL(optimal_weights(q).weights[0], s.embedding.kp_at(scalar(0.8)), 1e-15);
  }

  TEST_CASE("no nodes") {
    Setup s;
    const auto p = QuadratureProblem::build(s.kernel, s.embedding, PointSet(1, 0), Vector(0));
    const BQPosterior post = bq_posterior(p);
    CHECK(post.variance == s.embedding.kpp());
    CHECK(post.mean == 0.0);
    CHECK_REL(wce(p, Vector(0)), std::sqrt(s.embedding.kpp()), 1e-15);
  }

  TEST_CASE("reproducing property") {
    Setup s;
    const PointSet nodes = line({-1.5, -0.4, 0.2, 0.9, 2.0});
    for (Eigen::Index j = 0; j < nodes.cols(); ++j) {
      Vector y(nodes.cols());
      for (Eigen::Index i = 0; i < nodes.cols(); ++i) y[i] = kernel_eval(*s.kernel, nodes.col(i), nodes.col(j));
      const auto p = QuadratureProblem::build(s.kernel, s.embedding, nodes, y);
      CHECK_CLOSE(bq_posterior(p).mean, s.embedding.kp_at(nodes.col(j)), 1e-10);
    }
  }

  TEST_CASE("posterior variance equals the squared worst-case error of the optimal rule") {
    Setup s;
    const PointSet nodes = line({-2.0, -1.1, -0.3, 0.4, 1.0, 1.9});
    const auto p = QuadratureProblem::build(s.kernel, s.embedding, nodes, Vector::Ones(6));
    const BQPosterior post = bq_posterior(p);
    const double w = wce(p, post.weights);
    CHECK_CLOSE(w * w, post.variance, 1e-9);
  }

  TEST_CASE("optimal weights are a local minimum of the worst-case error") {
    Setup s;
    const auto p = QuadratureProblem::build(s.kernel, s.embedding, line({-1.0, -0.2, 0.5, 1.2, 2.2}));
    const Vector w = optimal_weights(p).weights;
    const double best = wce(p, w);
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z;
    for (int t = 0; t < 100; ++t) {
      Vector d(5);
      for (int i = 0; i < 5; ++i) d[i] = z(gen);
      d *= 1e-3 / d.norm();
      CHECK(best <= wce(p, w + d));
    }
  }

  TEST_CASE("variance does not increase when nodes are added") {
    Setup s;
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<double> xs;
    double previous = s.embedding.kpp();
    for (int n = 1; n <= 12; ++n) {
      xs.push_back(u(gen));
      PointSet nodes(1, n);
      for (int i = 0; i < n; ++i) nodes(0, i) = xs[static_cast<std::size_t>(i)];
      const double v = bq_posterior(QuadratureProblem::build(s.kernel, s.embedding, nodes, Vector::Zero(n))).variance;
      CHECK(v <= previous + 1e-10);
      previous = v;
    }
  }

  TEST_CASE("the worst-case error bounds the integration error") {
    Setup s;
    const PointSet nodes = line({-1.3, -0.5, 0.1, 0.8, 1.6});
    const auto p = QuadratureProblem::build(s.kernel, s.embedding, nodes);
    const Vector w = optimal_weights(p).weights;
    const double e = wce(p, w);
    std::mt19937_64 gen(12);
    std::normal_distribution<double> z;
    for (int t = 0; t < 50; ++t) {
      PointSet centres(1, 4);
      Vector a(4);
      for (int i = 0; i < 4; ++i) {
        centres(0, i) = 2.0 * z(gen);
        a[i] = z(gen);
      }
      const double norm = std::sqrt(a.dot(gram(*s.kernel, centres) * a));
      double integral = 0.0;
      for (int i = 0; i < 4; ++i) integral += a[i] * s.embedding.kp_at(centres.col(i));
      double rule = 0.0;
      for (int j = 0; j < 5; ++j) {
        double f = 0.0;
        for (int i = 0; i < 4; ++i) f += a[i] * kernel_eval(*s.kernel, nodes.col(j), centres.col(i));
        rule += w[j] * f;
      }
      CHECK(std::abs(integral - rule) <= norm * e * (1.0 + 1e-9) + 1e-14);
    }
  }

  TEST_CASE("periodic sobolev equal weights") {
    const auto k = Kernel::periodic_sobolev(2);
    const auto box = Measure::uniform_box(scalar(0.0), scalar(1.0));
    const PointSet nodes = line({0.05, 0.31, 0.47, 0.8});
    const auto p = QuadratureProblem::build(k, embed(*k, *box), nodes);
    const Vector w = Vector::Constant(4, 0.25);
    const double direct = -1.0 + gram(*k, nodes).sum() / 16.0;
    const double got = wce(p, w);
    CHECK_CLOSE(got * got, direct, 1e-13);
  }

  TEST_CASE("stein kernel gives zero weights") {
    const auto target = Measure::gaussian_diag(scalar(0.0), scalar(1.0));
    const auto k = Kernel::stein(Kernel::gaussian(scalar(1.0)), [target](const VectorRef& x) { return target->score(x); }, 0.0);
    const auto p = QuadratureProblem::build(k, embed(*k, *target), line({-0.5, 0.3, 1.2}), vec({1.0, 2.0, 3.0}));
    const BQPosterior post = bq_posterior(p);
    CHECK(post.weights.cwiseAbs().maxCoeff() == 0.0);
    CHECK(post.variance == 0.0);
    CHECK(post.mean == 0.0);
  }

  TEST_CASE("node validation and the jitter ladder") {
    Setup s;
    CHECK_THROWS_AS(QuadratureProblem::build(s.kernel, s.embedding, line({0.1, 0.1})), InvalidArgument);
    CHECK_THROWS_AS(QuadratureProblem::build(s.kernel, s.embedding, line({0.1, 0.2}), scalar(1.0)), InvalidArgument);
    CHECK_THROWS_AS(QuadratureProblem::build(s.kernel, s.embedding, line({0.1}), std::nullopt, -1.0), InvalidArgument);
    // nearly coincident nodes make C numerically singular
    const auto wide = Kernel::gaussian(scalar(50.0));
    const auto p = QuadratureProblem::build(wide, embed(*wide, *s.measure), line({0.0, 1e-6, 2e-6, 3e-6}), Vector::Ones(4));
    const BQPosterior post = bq_posterior(p);
    CHECK(post.jitter_applied > 0.0);
    CHECK(std::isfinite(post.mean));
  }

  TEST_CASE("inconsistent kernel and embedding are reported") {
    Setup s;
    const Embedding wrong("wrong", [](const VectorRef&) { return 1.0; }, Provenance::closed_form, 0.1, Provenance::closed_form);
    const auto p = QuadratureProblem::build(s.kernel, wrong, line({0.0, 1.0}), vec({1.0, 1.0}));
    CHECK_THROWS_AS(bq_posterior(p), NumericalError);
    CHECK_THROWS_AS(wce(p, Vector::Zero(2).array() + 1.0), NumericalError);
  }

  TEST_CASE("serial and parallel builds agree bit for bit") {
    Setup s;
    std::mt19937_64 gen(8);
    std::normal_distribution<double> z;
    PointSet nodes(1, 200);
    for (int i = 0; i < 200; ++i) nodes(0, i) = 3.0 * z(gen);
    const auto a = QuadratureProblem::build(s.kernel, s.embedding, nodes, std::nullopt, 0.0, parallel::Execution::parallel);
    const auto b = QuadratureProblem::build(s.kernel, s.embedding, nodes, std::nullopt, 0.0, parallel::Execution::serial);
    CHECK((a.gram.array() == b.gram.array()).all());
    CHECK((a.m.array() == b.m.array()).all());
  }
}

TEST_SUITE("mmd") {
  TEST_CASE("identical gaussians") {
    Setup s;
    CHECK_CLOSE(mmd2(*s.kernel, *s.measure, s.embedding, *s.measure), 0.0, 1e-12);
    const auto q = Measure::gaussian_diag(scalar(1.0), scalar(2.0));
    const double want = s.embedding.kpp() - 2.0 * 0.5 * std::exp(-0.125) + gauss_gauss(Matrix::Ones(1, 1), scalar(1.0), Matrix::Constant(1, 1, 2.0)).kpp();
    CHECK_CLOSE(mmd2(*s.kernel, *s.measure, s.embedding, *q), want, 1e-14);
  }

  TEST_CASE("a single point") {
    Setup s;
    const double x = 0.4;
    const auto q = Measure::empirical(line({x}));
    CHECK_CLOSE(mmd2(*s.kernel, *s.measure, s.embedding, *q), s.embedding.kpp() - 2.0 * s.embedding.kp_at(scalar(x)) + 1.0, 1e-15);
  }

  TEST_CASE("an empirical measure gives the worst-case error") {
    Setup s;
    const PointSet nodes = line({-1.0, -0.1, 0.6, 1.7});
    const auto p = QuadratureProblem::build(s.kernel, s.embedding, nodes, Vector::Zero(4));
    const Vector w = vec({0.1, 0.4, 0.3, 0.2});
    const double e = wce(p, w);
    CHECK_CLOSE(mmd2(*s.kernel, *s.measure, s.embedding, *Measure::empirical(nodes, w)), e * e, 1e-12);
    const BQPosterior post = bq_posterior(p);
    CHECK_CLOSE(mmd2(*s.kernel, s.embedding, nodes, post.weights), post.variance, 1e-9);
  }

  TEST_CASE("iid samples of P") {
    Setup s;
    const double big = mmd2(*s.kernel, *s.measure, s.embedding, *Measure::empirical(s.measure->sample(2000, 1)));
    CHECK(big >= -1e-10);
    CHECK(big <= 0.01);
    std::vector<double> small_n;
    std::vector<double> large_n;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      small_n.push_back(mmd2(*s.kernel, *s.measure, s.embedding, *Measure::empirical(s.measure->sample(100, seed))));
      large_n.push_back(mmd2(*s.kernel, *s.measure, s.embedding, *Measure::empirical(s.measure->sample(2000, seed + 100))));
    }
    std::sort(small_n.begin(), small_n.end());
    std::sort(large_n.begin(), large_n.end());
    CHECK(large_n[5] <= small_n[5]);
  }

  TEST_CASE("unsupported pairs") {
    Setup s;
    const auto box = Measure::uniform_box(scalar(0), scalar(1));
    CHECK_THROWS_AS(mmd2(*s.kernel, *s.measure, s.embedding, *box), UnsupportedPair);
  }
}
