#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "lbnn/dataset.hpp"
#include "lbnn/importance.hpp"
#include "lbnn/zero_temp.hpp"

namespace lbnn {

enum class Regime { monte_carlo, zero_temp, wide, large_p, li_sompolinsky, aitchison };

std::string_view to_string(Regime regime);
/// Throws InvalidArgument for unknown names.
Regime parse_regime(std::string_view name);

/// Posterior-mean first-layer feature kernel on the training set.
struct KernelEstimate {
  Matrix K;   // p × p
  Matrix se;  // p × p
  double ess = 0.0;
  Regime regime = Regime::monte_carlo;
  std::optional<double> residual;  // CARE residual for the Riccati regimes
};

/// Δ_L for all (μ, ν) from one eigendecomposition of G_xx and of L:
///   [Δ_L]_{μν} = β² vec(Y)ᵀ Γ_L⁻¹ (G_xx χ_{μν} G_xx ⊗ L) Γ_L⁻¹ vec(Y) − β tr[Γ_L⁻¹ (G_xx χ_{μν} G_xx ⊗ L)].
Matrix delta_of_L(const GramSet& grams, const Matrix& Y, const Matrix& L, double beta);

/// Scalar-output form Δ_λ = λβ² G Γ_λ⁻¹ y yᵀ Γ_λ⁻¹ G − λβ G Γ_λ⁻¹ G.
Matrix delta_scalar(const GramSet& grams, const Vector& y, double lambda, double beta);

/// ⟨K⟩ = G_xx + (1/n₁) E_ρ Δ_L by self-normalized importance sampling over L ~ ϖ.
/// At β = 0 or depth 1 the result is G_xx exactly.
KernelEstimate mean_kernel(const Dataset& ds, const NetworkShape& shape, std::int64_t num_samples,
                           std::uint64_t seed, const SamplingOptions& options = {});

/// β → ∞ kernel for depth 2: G_xx + (1/n₁)(Y E[L⁻¹] Yᵀ − n_d G_xx).
KernelEstimate zt_mean_kernel(const Dataset& ds, const NetworkShape& shape, const ScaleMoments& moments);

}  // namespace lbnn
