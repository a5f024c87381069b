#pragma once

#include <functional>
#include <vector>

#include "ked/embedding.hpp"
#include "ked/transforms.hpp"

namespace ked {

/// Product kernel against a product measure: block j of the coordinates is
/// handled by factors[j].
Embedding product_embed(const std::vector<Embedding>& factors, const std::vector<std::vector<int>>& blocks);

/// Lazily evaluated cross integral int int K_t dP_j dP_k.
struct CrossTerm {
  Provenance provenance = Provenance::closed_form;
  std::function<double()> value;
};

/// Resolver for the cross term of components (j, k), j != k, and kernel term t.
using CrossResolver = std::function<CrossTerm(std::size_t j, std::size_t k, std::size_t t)>;

/// Sum kernel sum_t gamma_t K_t against a mixture sum_j w_j P_j.
/// components[j][t] is the embedding of K_t against P_j.
Embedding mixture_embed(const std::vector<std::vector<Embedding>>& components, const std::vector<double>& weights,
                        const std::vector<double>& gammas, const CrossResolver& cross);

/// K(psi(x), psi(y)) against P where base is the embedding of K against psi_# P:
/// K_P(x) = base.kp_at(psi(x)) and K_PP = base.kpp().
Embedding pushforward_embed(const Embedding& base, const Transform& psi);

/// g = f p / q, so that int g dQ = int f dP.
ScalarField change_of_measure(ScalarField f, ScalarField p_density, ScalarField q_density);

MatrixEmbedding matrix_valued_embed(const Embedding& scalar, const Matrix& B);

}  // namespace ked
