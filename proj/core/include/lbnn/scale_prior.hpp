#pragma once

#include <cstdint>

#include "lbnn/dataset.hpp"
#include "lbnn/random.hpp"

namespace lbnn {

/// A draw of the n_d × n_d scale matrix L = W_d⋯W₂W₂ᵀ⋯W_dᵀ (1 × 1 when n_d = 1).
struct ScaleSample {
  Matrix L;
  double log_weight = 0.0;  // log dρ/dϖ up to a constant, filled by the posterior code
};

/// Draws W₂, …, W_d with i.i.d. N(0, 1/n_{ℓ−1}) entries and returns their scale product.
/// Requires depth ≥ 2.
ScaleSample sample_scale(const NetworkShape& shape, std::uint64_t seed);

/// Exact Wishart W_{n2}(I/n1, n1) draw via the Bartlett decomposition. Requires n1 ≥ n2.
ScaleSample sample_wishart(int n1, int n2, std::uint64_t seed);

/// Stream-based forms used inside estimators.
Matrix draw_scale_product(const NetworkShape& shape, Stream& stream);
Matrix draw_wishart(int n1, int n2, Stream& stream);

/// Same law as draw_scale_product, but the innermost product W₂W₂ᵀ is replaced by an exact
/// Bartlett Wishart draw when n₁ ≥ n₂, so the cost no longer grows with n₁.
/// Depth 1 returns the identity.
Matrix draw_scale(const NetworkShape& shape, Stream& stream);

/// log density of W_{n2}(I/n1, n1) at L; −inf when L is not PD.
double log_scale_density_d2(const Matrix& L, int n1, int n2);

}  // namespace lbnn
