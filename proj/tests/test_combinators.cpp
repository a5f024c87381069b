#include <random>

#include "ked/combinators.hpp"
#include "ked/dictionary.hpp"
#include "ked/error.hpp"
#include "ked/oracle.hpp"
#include "support.hpp"

using namespace ked;
using test::scalar;
using test::vec;

namespace {

Matrix one(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST_SUITE("combinators") {
  TEST_CASE("product of embeddings") {
    const Embedding g = gauss_gauss(one(1.0), scalar(0.0), one(1.0));
    const Embedding p = product_embed({g, g}, {{0}, {1}});
    CHECK_REL(p.kpp(), 1.0 / 3.0, 1e-15);
    CHECK_REL(p.kp_at(vec({0.0, 0.0})), 0.5, 1e-15);
    CHECK(p.provenance() == Provenance::closed_form);
    const Embedding single = product_embed({g}, {{0}});
    CHECK(single.kp_at(scalar(0.4)) == g.kp_at(scalar(0.4)));
    CHECK(single.kpp() == g.kpp());
    CHECK_THROWS_AS(product_embed({g, g}, {{0}, {0}}), InvalidArgument);
  }

  TEST_CASE("product kernel against a box equals the native tensor form") {
    const auto k = Kernel::product({{Kernel::gaussian(scalar(1.0)), {0}}, {Kernel::gaussian(scalar(2.0)), {1}}});
    const auto box = Measure::uniform_box(vec({0.0, -1.0}), vec({1.0, 2.0}));
    const Embedding viaproduct = embed(*k, *box);
    const Embedding native = gauss_uniform(vec({1.0, 2.0}), vec({0.0, -1.0}), vec({1.0, 2.0}));
    CHECK(viaproduct.provenance() == Provenance::closed_form);
    CHECK_CLOSE(viaproduct.kpp(), native.kpp(), 1e-14);
    for (const Vector& x : {vec({0.2, 0.3}), vec({-1.0, 2.5}), vec({0.9, -0.9})}) CHECK_CLOSE(viaproduct.kp_at(x), native.kp_at(x), 1e-14);
  }

  TEST_CASE("product kernel against a product measure with permuted blocks") {
    const auto k = Kernel::product({{Kernel::matern(1, 0.5), {1}}, {Kernel::gaussian(scalar(1.0)), {0}}});
    const auto m = Measure::product({Measure::gaussian_diag(scalar(0.0), scalar(1.0)), Measure::uniform_box(scalar(0.0), scalar(1.0))});
    const Embedding e = embed(*k, *m);
    const Embedding a = gauss_gauss(one(1.0), scalar(0.0), one(1.0));
    const Embedding b = matern_uniform_special(1, 0.5, 0.0, 1.0);
    CHECK(e.provenance() == Provenance::closed_form);
    CHECK_CLOSE(e.kp_at(vec({0.3, 0.6})), a.kp_at(scalar(0.3)) * b.kp_at(scalar(0.6)), 1e-15);
    CHECK_CLOSE(e.kpp(), a.kpp() * b.kpp(), 1e-15);
  }

  TEST_CASE("mixture of identical components") {
    const auto g = Measure::gaussian_diag(scalar(0.3), scalar(0.5));
    const auto k = Kernel::gaussian(scalar(0.8));
    const Embedding single = embed(*k, *g);
    const Embedding mix = embed(*k, *Measure::mixture({g, g}, {0.25, 0.75}));
    CHECK(mix.provenance() == Provenance::closed_form);
    CHECK_CLOSE(mix.kp_at(scalar(1.1)), single.kp_at(scalar(1.1)), 1e-15);
    CHECK_CLOSE(mix.kpp(), single.kpp(), 1e-15);
  }

  TEST_CASE("gaussian mixture K_PP against the oracle") {
    const auto mix = Measure::mixture({Measure::gaussian_diag(scalar(-1.0), scalar(1.0)),
                                       Measure::gaussian_diag(scalar(1.0), scalar(1.0))},
                                      {0.5, 0.5});
    const auto k = Kernel::gaussian(scalar(1.0));
    const Embedding e = embed(*k, *mix);
    const double want = 0.5 / std::sqrt(3.0) + 0.5 * std::exp(-4.0 / 6.0) / std::sqrt(3.0);
    CHECK_REL(e.kpp(), want, 1e-14);
    const OracleEstimate q = estimate_kpp(*k, *mix, {400, 0});
    CHECK(q.method == OracleMethod::gauss_hermite);
    CHECK_CLOSE(q.value, e.kpp(), 1e-10);
  }

  TEST_CASE("mixture with non-gaussian components resolves cross terms numerically") {
    const auto mix = Measure::mixture({Measure::uniform_box(scalar(0.0), scalar(1.0)), Measure::uniform_box(scalar(0.5), scalar(2.0))},
                                      {0.4, 0.6});
    const auto k = Kernel::matern(2, 0.7);
    const Embedding e = embed(*k, *mix);
    CHECK(e.kp_provenance() == Provenance::closed_form);
    CHECK(e.kpp_provenance() == Provenance::numeric_fallback);
    CHECK_CLOSE(e.kp_at(scalar(0.9)),
                0.4 * matern_uniform_special(2, 0.7, 0.0, 1.0).kp_at(scalar(0.9)) +
                    0.6 * matern_uniform_special(2, 0.7, 0.5, 2.0).kp_at(scalar(0.9)),
                1e-15);
    CHECK_CLOSE(e.kpp(), estimate_kpp(*k, *mix, {200, 0}).value, 1e-9);
  }

  TEST_CASE("sum kernel is linear in the embedding") {
    const auto g = Kernel::gaussian(scalar(1.0));
    const auto m = Kernel::matern(0, 1.0);
    const auto box = Measure::uniform_box(scalar(0.0), scalar(1.0));
    const Embedding s = embed(*Kernel::sum({g, m}, {1.0, 1.0}), *box);
    const Embedding eg = embed(*g, *box);
    const Embedding em = embed(*m, *box);
    for (double x : {0.0, 0.3, 1.4}) CHECK(s.kp_at(scalar(x)) == eg.kp_at(scalar(x)) + em.kp_at(scalar(x)));
    CHECK_CLOSE(s.kpp(), eg.kpp() + em.kpp(), 1e-15);
  }

  TEST_CASE("change of variables") {
    const auto g = Kernel::gaussian(scalar(0.4));
    const auto box = Measure::uniform_box(scalar(0.0), scalar(1.0));
    const Embedding base = embed(*g, *box);
    const Embedding same = pushforward_embed(base, Transform::identity());
    CHECK(same.kp_at(scalar(0.3)) == base.kp_at(scalar(0.3)));
    CHECK(same.kpp() == base.kpp());

    // K(Phi(x), Phi(y)) against N(0,1) is the uniform embedding in disguise.
    const auto composed = Kernel::composed(g, Transform::named("normal_cdf"));
    const auto normal = Measure::gaussian_diag(scalar(0.0), scalar(1.0));
    const Embedding e = embed(*composed, *normal);
    CHECK(e.provenance() == Provenance::closed_form);
    CHECK(e.kpp() == base.kpp());
    const OracleEstimate o = estimate_kp(*composed, *normal, scalar(0.7), {400, 0});
    CHECK_CLOSE(e.kp_at(scalar(0.7)), o.value, 1e-9);

    const auto viaq = Measure::pushforward(box, Transform::named("normal_quantile"));
    CHECK(embed(*composed, *viaq).kpp() == base.kpp());

    const auto composed_q = Kernel::composed(g, Transform::named("normal_quantile"));
    const Embedding eq = embed(*composed_q, *box);
    const OracleEstimate mc = estimate_kp(*composed_q, *box, scalar(0.2), {400, 0});
    CHECK_CLOSE(eq.kp_at(scalar(0.2)), mc.value, 1e-6);
  }

  TEST_CASE("change of measure") {
    const auto p = Measure::gaussian_diag(scalar(0.0), scalar(1.0));
    const auto q = Measure::gaussian_diag(scalar(0.0), scalar(2.0));
    const ScalarField f = [](const VectorRef& x) { return x[0] * x[0]; };
    const ScalarField pd = [p](const VectorRef& x) { return p->density(x); };
    const ScalarField qd = [q](const VectorRef& x) { return q->density(x); };
    const ScalarField same = change_of_measure(f, pd, pd);
    CHECK(same(scalar(0.7)) == f(scalar(0.7)));
    const ScalarField g = change_of_measure(f, pd, qd);
    std::mt19937_64 gen(1);
    std::normal_distribution<double> draw(0.0, std::sqrt(2.0));
    double sum = 0.0;
    double sum_sq = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const double v = g(scalar(draw(gen)));
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 1.0) <= 3.0 * std::sqrt((sum_sq / n - mean * mean) / (n - 1)));
    const ScalarField unit = [](const VectorRef&) { return 1.0; };
    const OracleEstimate one_est = integrate(change_of_measure(unit, pd, qd), *q, {200, 0});
    CHECK_CLOSE(one_est.value, 1.0, 1e-12);
    const ScalarField zero_q = [](const VectorRef&) { return 0.0; };
    CHECK_THROWS_AS(change_of_measure(unit, pd, zero_q)(scalar(0.0)), InvalidArgument);
  }

  TEST_CASE("matrix-valued kernels") {
    const Embedding g = gauss_gauss(one(1.0), scalar(0.0), one(1.0));
    const MatrixEmbedding id = matrix_valued_embed(g, Matrix::Identity(3, 3));
    CHECK((id.kp_at(scalar(0.2)) - Matrix::Identity(3, 3) * g.kp_at(scalar(0.2))).norm() == 0.0);
    const MatrixEmbedding zero = matrix_valued_embed(g, Matrix::Zero(2, 2));
    CHECK(zero.kpp().norm() == 0.0);
    Matrix B(2, 2);
    B << 2.0, 1.0, 1.0, 2.0;
    const MatrixEmbedding mb = embed_matrix(*Kernel::matrix_valued(Kernel::gaussian(scalar(1.0)), B),
                                            *Measure::gaussian_diag(scalar(0.0), scalar(1.0)));
    CHECK((mb.kpp() - B / std::sqrt(3.0)).cwiseAbs().maxCoeff() <= 1e-15);
    Matrix neg(2, 2);
    neg << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS(matrix_valued_embed(g, neg), InvalidArgument);
  }
}
