#include "ked/embedding.hpp"

namespace ked {

std::string to_string(Provenance p) { return p == Provenance::closed_form ? "closed_form" : "numeric_fallback"; }

Embedding::Embedding(std::string pair_id, ScalarField kp, Provenance kp_provenance, double kpp,
                     Provenance kpp_provenance)
    : Embedding(std::move(pair_id), std::move(kp), kp_provenance, std::function<double()>([kpp] { return kpp; }),
                kpp_provenance) {}

Embedding::Embedding(std::string pair_id, ScalarField kp, Provenance kp_provenance, std::function<double()> kpp,
                     Provenance kpp_provenance)
    : pair_id_(std::move(pair_id)),
      kp_(std::move(kp)),
      kp_provenance_(kp_provenance),
      kpp_provenance_(kpp_provenance),
      kpp_(std::make_shared<LazyScalar>()) {
  kpp_->compute = std::move(kpp);
}

double Embedding::kpp() const {
  std::call_once(kpp_->once, [this] { kpp_->value = kpp_->compute(); });
  return kpp_->value;
}

Provenance Embedding::provenance() const {
  return kp_provenance_ == Provenance::closed_form && kpp_provenance_ == Provenance::closed_form
             ? Provenance::closed_form
             : Provenance::numeric_fallback;
}

}  // namespace ked
