#pragma once

#include <cstdint>
#include <optional>

#include "lbnn/dataset.hpp"
#include "lbnn/importance.hpp"
#include "lbnn/mgig.hpp"

namespace lbnn {

/// E L and E L⁻¹ under the zero-temperature scale law, with standard errors.
struct ScaleMoments {
  Matrix mean_L;
  Matrix mean_Linv;
  Matrix se_L;
  Matrix se_Linv;
  std::int64_t samples = 0;
  // Chain diagnostics (n_d ≥ 2 only).
  std::optional<double> acceptance_rate;
  std::optional<Vector> chain_ess;
};

/// lim_{β→∞} mean predictor: G_xx̂ᵀ G_xx⁻¹ Y (p̂ × n_d).
Matrix zt_mean(const GramSet& grams, const Matrix& Y);

/// Schur complement G_x̂x̂ − G_xx̂ᵀ G_xx⁻¹ G_xx̂, clamped to PSD.
Matrix zt_schur(const GramSet& grams);

/// (G_x̂x̂ − G_xx̂ᵀ G_xx⁻¹ G_xx̂) ⊗ E L, row-major channel-inner indexing.
Matrix zt_covariance(const GramSet& grams, const Matrix& mean_L);

/// ‖X pinv(X) Y − Y‖_F; zero for linearly interpolatable data.
double interpolation_residual(const Dataset& ds);
/// Throws InvalidArgument unless interpolation_residual ≤ 1e-8 · max(1, ‖Y‖).
void require_interpolatable(const Dataset& ds);

/// Parameters of the two-layer zero-temperature scale law:
/// A = Yᵀ G_xx⁻¹ Y, B = n₁ I, ν = (n₁ − p)/2.
MgigParams zt_mgig_params(const GramSet& grams, const Matrix& Y, int n1);

/// Estimates E L and E L⁻¹ for depth 2 at β = ∞: exact GIG draws for n_d = 1,
/// four independent Metropolis chains for n_d ≥ 2. Requires n₁ > p.
ScaleMoments zt_scale_moments(const Dataset& ds, const NetworkShape& shape, std::int64_t num_samples,
                              std::uint64_t seed, const SamplingOptions& options = {});

}  // namespace lbnn
