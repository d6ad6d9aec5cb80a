#pragma once

#include "lbnn/dataset.hpp"

namespace lbnn {

/// α = p/n and γ = n_d/n for hidden width n.
struct RegimeRatios {
  double alpha = 0.0;
  double gamma = 0.0;

  static RegimeRatios from_sizes(Eigen::Index p, Eigen::Index nd, int n);
  /// Throws InvalidArgument unless 0 ≤ α < 1 and 0 ≤ γ ≤ 1.
  void validate() const;
};

/// Large width, fixed data: G_xx + γ G_xx Γ∞⁻¹ (G_yy − Γ∞) Γ∞⁻¹ G_xx with Γ∞ = G_xx + I/β
/// (Γ∞ = G_xx when β = inf). Remainder is O(γ²).
Matrix kernel_wide(const GramSet& grams, double gamma, double beta);

/// Large dataset, zero temperature: (1 − γ) G_xx + (1/n₁) Y (Yᵀ G_xx⁻¹ Y / p)⁻¹ Yᵀ, γ = n_d/n₁.
Matrix kernel_large_p(const GramSet& grams, const Matrix& Y, int n1);

struct CareSolution {
  Matrix L;
  double residual = 0.0;  // Frobenius norm of the equation's left-hand side at L
};

/// Positive root of I − L⁻¹ M L⁻¹ − (1 − α) L⁻¹ = 0 with M = Yᵀ G_xx⁻¹ Y / n₁:
/// L = ½[(1 − α) I + ((1 − α)² I + 4M)^{1/2}].
CareSolution care_li_sompolinsky(const GramSet& grams, const Matrix& Y, int n1, double alpha);

/// ½ G_xx [(1 + α) I + ((1 − α)² I + 4γ G_xx⁻¹ G_yy)^{1/2}], symmetrized.
Matrix kernel_li_sompolinsky(const GramSet& grams, double alpha, double gamma);
/// Leading order in γ: (1 − γ) G_xx + γ/(1 − α) G_yy.
Matrix kernel_li_sompolinsky_leading(const GramSet& grams, double alpha, double gamma);

struct AitchisonSolution {
  Matrix K;
  double residual = 0.0;  // ‖K G_xx⁻¹ K + (γ − 1) K − γ G_yy‖_F
};

/// Large width and output dimension: positive solution of
/// G_xx⁻¹ − γ K⁻¹ G_yy K⁻¹ + (γ − 1) K⁻¹ = 0,
/// K = ½ G_xx [(1 − γ) I + ((1 − γ)² I + 4γ G_xx⁻¹ G_yy)^{1/2}]. Requires γ ∈ (0, 1].
AitchisonSolution kernel_aitchison(const GramSet& grams, double gamma);

}  // namespace lbnn
