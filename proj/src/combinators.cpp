#include "ked/combinators.hpp"

#include <set>

#include "ked/error.hpp"

namespace ked {

namespace {

Provenance both(Provenance a, Provenance b) {
  return a == Provenance::closed_form && b == Provenance::closed_form ? Provenance::closed_form
                                                                      : Provenance::numeric_fallback;
}

}  // namespace

Embedding product_embed(const std::vector<Embedding>& factors, const std::vector<std::vector<int>>& blocks) {
  require(!factors.empty(), "product_embed: no factors");
  require(factors.size() == blocks.size(), "product_embed: one coordinate block per factor");
  std::set<int> seen;
  for (const auto& b : blocks) {
    require(!b.empty(), "product_embed: empty coordinate block");
    for (int c : b) {
      require(c >= 0, "product_embed: negative coordinate");
      require(seen.insert(c).second, "product_embed: overlapping coordinate blocks");
    }
  }
  require(*seen.rbegin() == static_cast<int>(seen.size()) - 1, "product_embed: blocks do not cover 0..d-1");

  Provenance kp_prov = Provenance::closed_form;
  Provenance kpp_prov = Provenance::closed_form;
  std::string id = "product(";
  for (std::size_t j = 0; j < factors.size(); ++j) {
    kp_prov = both(kp_prov, factors[j].kp_provenance());
    kpp_prov = both(kpp_prov, factors[j].kpp_provenance());
    id += (j ? "," : "") + factors[j].pair_id();
  }
  id += ")";

  const int dim = static_cast<int>(seen.size());
  ScalarField kp = [factors, blocks, dim](const VectorRef& x) {
    require(x.size() == dim, "product embedding: dimension mismatch");
    double acc = 1.0;
    for (std::size_t j = 0; j < factors.size(); ++j) {
      Vector sub(static_cast<Eigen::Index>(blocks[j].size()));
      for (std::size_t i = 0; i < blocks[j].size(); ++i) sub[static_cast<Eigen::Index>(i)] = x[blocks[j][i]];
      acc *= factors[j].kp_at(sub);
    }
    return acc;
  };
  std::function<double()> kpp = [factors] {
    double acc = 1.0;
    for (const auto& f : factors) acc *= f.kpp();
    return acc;
  };
  return Embedding(id, std::move(kp), kp_prov, std::move(kpp), kpp_prov);
}

Embedding mixture_embed(const std::vector<std::vector<Embedding>>& components, const std::vector<double>& weights,
                        const std::vector<double>& gammas, const CrossResolver& cross) {
  const std::size_t J = components.size();
  const std::size_t T = gammas.size();
  require(J >= 1 && T >= 1, "mixture_embed: need at least one component and one kernel term");
  require(weights.size() == J, "mixture_embed: one weight per component");
  double wsum = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "mixture_embed: negative mixture weight");
    wsum += w;
  }
  require(std::abs(wsum - 1.0) <= 1e-12, "mixture_embed: mixture weights must sum to 1");
  for (double g : gammas) require(std::isfinite(g), "mixture_embed: kernel weights must be finite");
  for (const auto& row : components) require(row.size() == T, "mixture_embed: one embedding per kernel term");

  Provenance kp_prov = Provenance::closed_form;
  Provenance kpp_prov = Provenance::closed_form;
  std::vector<std::function<double()>> terms;
  std::vector<double> coeffs;
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t t = 0; t < T; ++t) kp_prov = both(kp_prov, components[j][t].kp_provenance());
  }
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < J; ++k) {
      if (weights[j] == 0.0 || weights[k] == 0.0) continue;
      for (std::size_t t = 0; t < T; ++t) {
        if (gammas[t] == 0.0) continue;
        if (j == k) {
          const Embedding e = components[j][t];
          kpp_prov = both(kpp_prov, e.kpp_provenance());
          terms.push_back([e] { return e.kpp(); });
        } else {
          CrossTerm c = cross(j, k, t);
          kpp_prov = both(kpp_prov, c.provenance);
          terms.push_back(std::move(c.value));
        }
        coeffs.push_back(weights[j] * weights[k] * gammas[t]);
      }
    }
  }

  std::string id = components[0][0].pair_id();
  if (J > 1 || T > 1) id = "mixture(" + id + (J > 1 ? ",components=" + std::to_string(J) : "") +
                           (T > 1 ? ",terms=" + std::to_string(T) : "") + ")";

  ScalarField kp = [components, weights, gammas](const VectorRef& x) {
    double acc = 0.0;
    for (std::size_t j = 0; j < components.size(); ++j) {
      if (weights[j] == 0.0) continue;
      for (std::size_t t = 0; t < gammas.size(); ++t) {
        if (gammas[t] != 0.0) acc += weights[j] * gammas[t] * components[j][t].kp_at(x);
      }
    }
    return acc;
  };
  std::function<double()> kpp = [terms, coeffs] {
    double acc = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) acc += coeffs[i] * terms[i]();
    return acc;
  };
  return Embedding(id, std::move(kp), kp_prov, std::move(kpp), kpp_prov);
}

Embedding pushforward_embed(const Embedding& base, const Transform& psi) {
  ScalarField kp = [base, psi](const VectorRef& x) { return base.kp_at(psi(x)); };
  std::function<double()> kpp = [base] { return base.kpp(); };
  return Embedding("composed(" + base.pair_id() + ")", std::move(kp), base.kp_provenance(), std::move(kpp),
                   base.kpp_provenance());
}

ScalarField change_of_measure(ScalarField f, ScalarField p_density, ScalarField q_density) {
  return [f = std::move(f), p = std::move(p_density), q = std::move(q_density)](const VectorRef& x) {
    const double px = p(x);
    const double qx = q(x);
    if (qx == 0.0) {
      require(px == 0.0, "change_of_measure: q vanishes where p is positive");
      return 0.0;
    }
    return f(x) * px / qx;
  };
}

MatrixEmbedding matrix_valued_embed(const Embedding& scalar, const Matrix& B) {
  require(B.rows() == B.cols(), "matrix_valued_embed: B must be square");
  require((B - B.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + B.cwiseAbs().maxCoeff()),
          "matrix_valued_embed: B must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(B, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() >= -1e-12 * (1.0 + B.cwiseAbs().maxCoeff()),
          "matrix_valued_embed: B must be positive semi-definite");
  return MatrixEmbedding(scalar, B);
}

}  // namespace ked
