#pragma once

#include <optional>

#include "ked/embedding.hpp"
#include "ked/kernels.hpp"

namespace ked {

/// Analytic gradients and the mixed-derivative trace for base kernels that
/// ship them: gaussian (any Lambda) and matern nu = 5/2.
std::optional<KernelDerivatives> analytic_derivatives(const Kernel& base);

/// Langevin Stein kernel
///   K(x,y) s(x).s(y) + grad_x K . s(y) + grad_y K . s(x) + Tr(grad_x grad_y K) + C
/// with s the score of the target.
double stein_eval(const SteinKernel& sk, const VectorRef& x, const VectorRef& y);

/// Embedding of a Stein kernel against its own target: the constant C.
/// The integrability of the score under the target is the caller's
/// responsibility.
Embedding stein_embed(const SteinKernel& sk);

}  // namespace ked
