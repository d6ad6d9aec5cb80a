#pragma once

#include <cstdint>

#include "lbnn/dataset.hpp"
#include "lbnn/importance.hpp"

namespace lbnn {

/// The Gaussian-process component attached to one value of the scale matrix L.
///
///   Γ_L = I + β G_xx ⊗ L                                   (p n_d × p n_d)
///   Σ_L = G_x̂x̂ ⊗ L − β (G_xx̂ᵀ ⊗ L) Γ_L⁻¹ (G_xx̂ ⊗ L)         (p̂ n_d × p̂ n_d)
///   μ_L = β (G_xx̂ᵀ ⊗ L) Γ_L⁻¹ vec(Y)                        (p̂ n_d)
///   log_rho_weight = −½ log det Γ_L − (β/2) vec(Y)ᵀ Γ_L⁻¹ vec(Y)
///
/// All vectorizations are row-major.
struct GPComponents {
  Matrix Gamma;
  Matrix Sigma;
  Vector mu;
  double log_rho_weight = 0.0;
};

/// Dense-output evaluation of the component at a single L. Uses the eigenstructure of
/// G_xx and L; never factors a p n_d × p n_d matrix.
GPComponents gp_components(const GramSet& grams, const Matrix& L, double beta, const Matrix& Y);

/// Scalar-output specialization (n_d = 1): Γ_λ = I + βλG_xx and so on, all p × p.
GPComponents gp_components_scalar(const GramSet& grams, double lambda, double beta, const Vector& y);

/// Reusable per-dataset factorization G_xx = U D Uᵀ; evaluates per-L quantities in
/// O(p² n_d + p̂² p n_d + n_d³) without materializing Γ_L.
class ScaleMixture {
 public:
  ScaleMixture(const GramSet& grams, const Matrix& Y, double beta);

  struct Component {
    Matrix mean;   // μ_L reshaped p̂ × n_d
    Matrix Sigma;  // p̂ n_d × p̂ n_d
    double log_rho_weight;
  };

  /// log weight only (cheapest path).
  double log_rho_weight(const Matrix& L) const;
  Component component(const Matrix& L, bool with_sigma = true) const;
  /// Δ_L, the p × p kernel correction for this L.
  Matrix delta(const Matrix& L) const;
  /// Δ_L together with the log weight, sharing the L decomposition.
  std::pair<Matrix, double> delta_and_weight(const Matrix& L) const;

  double beta() const { return beta_; }
  const GramSet& grams() const { return grams_; }

 private:
  struct Solve;
  Solve solve(const Matrix& L) const;

  GramSet grams_;
  Matrix Y_;
  double beta_;
  Vector d_;        // eigenvalues of G_xx
  Matrix U_;        // eigenvectors of G_xx
  Matrix UtY_;      // Uᵀ Y
  Matrix C_;        // G_xx̂ᵀ U
};

/// Posterior predictive moments over the test inputs.
struct PredictiveMoments {
  Matrix mean;     // p̂ × n_d
  Matrix cov;      // p̂ n_d × p̂ n_d, row-major index μ̂ n_d + j
  Matrix mean_se;
  Matrix cov_se;
  double ess = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

/// Self-normalized importance sampling over L ~ ϖ with weights dρ/dϖ.
///
/// mean = Σ w_s μ_s, cov = Σ w_s Σ_s + (weighted covariance of μ_s). Depth 1 is
/// evaluated exactly at L = I. Throws EstimatorDiagnostic when the ESS falls below
/// options.ess_floor or the covariance is negative beyond the clamp tolerance.
PredictiveMoments predictive_moments(const Dataset& ds, const NetworkShape& shape, std::int64_t num_samples,
                                     std::uint64_t seed, const SamplingOptions& options = {});

/// Self-normalized estimate of log Z(β, J) = log E_ρ exp(μ_Lᵀ vec J + ½ vec Jᵀ Σ_L vec J).
/// J is p̂ × n_d. Throws NumericalError if any per-sample exponent exceeds 700.
double log_mgf(const Dataset& ds, const NetworkShape& shape, const Matrix& J, std::int64_t num_samples,
               std::uint64_t seed, const SamplingOptions& options = {});

/// Symmetric covariance with eigenvalues in [−1e-8·|trace|, 0) clamped to zero.
Matrix clamp_covariance(const Matrix& cov);

}  // namespace lbnn
