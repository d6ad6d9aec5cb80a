#pragma once

#include <cstdint>
#include <vector>

#include "lbnn/linalg.hpp"

namespace lbnn {

/// Matrix GIG law on n × n PD matrices:
/// density ∝ det(L)^{ν − (n+1)/2} etr(−(B L + A L⁻¹)/2).
struct MgigParams {
  Matrix A;  // PSD
  Matrix B;  // PD
  double nu;

  Eigen::Index dim() const { return B.rows(); }
  void validate() const;
};

/// Unnormalized log density; −inf for L that is not PD.
double mgig_log_density(const Matrix& L, const MgigParams& params);

/// Stationary point of the density when B = b·I:
/// L = (c I + sqrt(c² I + b A)) / b with c = ν − (n+1)/2.
Matrix mgig_mode(const MgigParams& params);

struct MgigChainOptions {
  std::int64_t steps = 20000;    // post-burn-in steps
  std::int64_t burn_in = 5000;   // step size is tuned here
  std::int64_t thin = 1;
  double initial_step = 0.1;
};

struct MgigChain {
  std::vector<Matrix> samples;
  double acceptance_rate = 0.0;  // post-burn-in
  double step_size = 0.0;
  Vector ess;                    // per upper-triangular coordinate of L, batch-means estimate
};

/// Random-walk Metropolis on the lower Cholesky factor of L with log-transformed
/// diagonal, isotropic Gaussian proposals, step size tuned during burn-in toward a
/// 20–40% acceptance rate. Requires n ≥ 2. Throws EstimatorDiagnostic when the
/// post-burn-in acceptance rate is below 1%.
MgigChain sample_mgig_mcmc(const MgigParams& params, const MgigChainOptions& options, std::uint64_t seed);

}  // namespace lbnn
