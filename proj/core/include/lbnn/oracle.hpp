#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lbnn/dataset.hpp"
#include "lbnn/feature_kernel.hpp"
#include "lbnn/importance.hpp"
#include "lbnn/posterior_mixture.hpp"
#include "lbnn/random.hpp"

// Reference posterior computations that work directly in weight space (or by 1-D
// quadrature), independent of the scale-mixture code paths they are used to check.
namespace lbnn::oracle {

/// Weights W₁, …, W_d; W[ℓ−1] is n_ℓ × n_{ℓ−1}.
struct WeightState {
  std::vector<Matrix> W;
};

/// Exact-conditional Gibbs sampler over all weight matrices.
///
/// Holding the other layers fixed, F = P W_ℓᵀ Qᵀ with P = X W₁ᵀ⋯W_{ℓ−1}ᵀ and
/// Q = W_d⋯W_{ℓ+1}, so row-major vec(W_ℓᵀ) is Gaussian with precision
/// n_{ℓ−1} I + β (PᵀP ⊗ QᵀQ) and mean solving precision · m = β vec(Pᵀ Y Q).
class GibbsSampler {
 public:
  GibbsSampler(const Dataset& ds, const NetworkShape& shape, std::uint64_t seed);

  struct Conditional {
    Vector mean;       // row-major vec(W_ℓᵀ)
    Matrix precision;
  };
  /// Conditional of layer ℓ ∈ [1, d] given the current values of all other layers.
  Conditional conditional(int layer) const;
  void update_layer(int layer);
  void sweep();

  const WeightState& state() const { return state_; }
  void set_state(WeightState state);
  /// log prior + log likelihood up to a constant.
  double log_posterior() const;

 private:
  Dataset ds_;
  NetworkShape shape_;
  Stream stream_;
  WeightState state_;
};

/// Runs burn_in + sweeps cyclic sweeps and returns the post-burn-in states.
/// burn_in < 0 selects 10% of sweeps.
std::vector<WeightState> gibbs_posterior(const Dataset& ds, const NetworkShape& shape, std::int64_t sweeps,
                                         std::int64_t burn_in, std::uint64_t seed);

/// Prior sampling of every weight, reweighted by exp(−β/2 ‖F − Y‖²).
PredictiveMoments prior_importance(const Dataset& ds, const NetworkShape& shape, std::int64_t num_samples,
                                   std::uint64_t seed, const SamplingOptions& options = {});

/// Adaptive 1-D quadrature over λ against the Gamma(n₁/2, 2/n₁) prior of a two-layer,
/// scalar-output network. Standard errors are zero.
PredictiveMoments quadrature_scalar(const Dataset& ds, const NetworkShape& shape);
KernelEstimate quadrature_scalar_kernel(const Dataset& ds, const NetworkShape& shape);

struct EmpiricalMoments {
  PredictiveMoments predictive;
  KernelEstimate kernel;
  bool se_defined = false;  // false for short or constant chains; SE entries are NaN then
};

/// Predictive moments of F̂ = X̂ W₁ᵀ⋯W_dᵀ and the mean of K = (1/n₁) X W₁ᵀ W₁ Xᵀ over a
/// chain, with 50-batch batch-means standard errors.
EmpiricalMoments empirical_moments(const std::vector<WeightState>& states, const Dataset& ds);

struct ChainDumpInfo {
  std::vector<int> widths;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::int64_t num_states = 0;
};

/// Writes `<prefix>.bin` (row-major float64, little endian, W₁…W_d per state) and a
/// `<prefix>.json` sidecar with shapes, seed and β.
void write_chain_dump(const std::filesystem::path& prefix, const std::vector<WeightState>& states,
                      const NetworkShape& shape, std::uint64_t seed);
std::vector<WeightState> read_chain_dump(const std::filesystem::path& prefix, ChainDumpInfo* info = nullptr);

}  // namespace lbnn::oracle
