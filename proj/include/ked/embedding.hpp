#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "ked/types.hpp"

namespace ked {

enum class Provenance { closed_form, numeric_fallback };

std::string to_string(Provenance p);

/// A kernel mean embedding K_P together with its double integral K_PP.
///
/// K_P and K_PP carry separate provenance flags: several dictionary entries
/// have a closed-form K_P but only a numerical K_PP. A numerical K_PP is
/// computed lazily on first use and cached (thread-safe).
class Embedding {
 public:
  Embedding(std::string pair_id, ScalarField kp, Provenance kp_provenance, double kpp, Provenance kpp_provenance);
  Embedding(std::string pair_id, ScalarField kp, Provenance kp_provenance, std::function<double()> kpp,
            Provenance kpp_provenance);

  double kp_at(const VectorRef& x) const { return kp_(x); }
  double kpp() const;

  Provenance kp_provenance() const { return kp_provenance_; }
  Provenance kpp_provenance() const { return kpp_provenance_; }
  // closed_form only when both parts are.
  Provenance provenance() const;

  const std::string& pair_id() const { return pair_id_; }
  const ScalarField& kp_function() const { return kp_; }

 private:
  struct LazyScalar {
    std::once_flag once;
    std::function<double()> compute;
    double value = 0.0;
  };

  std::string pair_id_;
  ScalarField kp_;
  Provenance kp_provenance_;
  Provenance kpp_provenance_;
  std::shared_ptr<LazyScalar> kpp_;
};

/// Embedding of a matrix-valued kernel B * K_s: both parts are B scaled by
/// the scalar embedding.
class MatrixEmbedding {
 public:
  MatrixEmbedding(Embedding scalar, Matrix B) : scalar_(std::move(scalar)), B_(std::move(B)) {}

  Matrix kp_at(const VectorRef& x) const { return B_ * scalar_.kp_at(x); }
  Matrix kpp() const { return B_ * scalar_.kpp(); }

  const Embedding& scalar() const { return scalar_; }
  const Matrix& B() const { return B_; }

 private:
  Embedding scalar_;
  Matrix B_;
};

}  // namespace ked
