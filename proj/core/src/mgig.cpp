#include "lbnn/mgig.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "lbnn/error.hpp"
#include "lbnn/random.hpp"

namespace lbnn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Unconstrained coordinates θ: row-major lower triangle of the Cholesky factor, with
// log of the diagonal entries.
Matrix factor_from(const Vector& theta, Eigen::Index n) {
  Matrix c = Matrix::Zero(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) c(i, j) = (i == j) ? std::exp(theta(k++)) : theta(k++);
  }
  return c;
}

Vector theta_from(const Matrix& L) {
  const auto n = L.rows();
  const Matrix c = Eigen::LLT<Matrix>(L).matrixL();
  Vector theta(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) theta(k++) = (i == j) ? std::log(c(i, i)) : c(i, j);
  }
  return theta;
}

// Target in θ-space: log density at L = CCᵀ plus the log Jacobian
// log|dL/dθ| = n log 2 + Σ_i (n − i + 1) log c_ii + Σ_i log c_ii   (i = 1..n).
double log_target(const Vector& theta, const MgigParams& params) {
  const auto n = params.dim();
  const Matrix c = factor_from(theta, n);
  double log_diag = 0.0;
  double jacobian = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lc = std::log(c(i, i));
    log_diag += lc;
    jacobian += static_cast<double>(n - i + 1) * lc;
  }
  const Matrix l = c * c.transpose();
  const Matrix c_inv = c.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  const double tr_a_linv = (c_inv * params.A * c_inv.transpose()).trace();
  const double log_det = 2.0 * log_diag;
  const double value = (params.nu - 0.5 * static_cast<double>(n + 1)) * log_det -
                       0.5 * ((params.B * l).trace() + tr_a_linv) + jacobian;
  return std::isfinite(value) ? value : kNegInf;
}

}  // namespace

void MgigParams::validate() const {
  const auto n = B.rows();
  if (n < 1 || B.cols() != n || A.rows() != n || A.cols() != n) throw InvalidArgument("mgig: A and B must be n x n");
  if (!std::isfinite(nu)) throw InvalidArgument("mgig: nu must be finite");
  require_positive_definite(B, "mgig B");
  if (relative_asymmetry(A) > 1e-8) throw InvalidArgument("mgig: A is not symmetric");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if (symmetric_eigen(A).values.minCoeff() < -kPsdClampTolerance * scale) throw InvalidArgument("mgig: A is not PSD");
}

double mgig_log_density(const Matrix& L, const MgigParams& params) {
  const auto n = params.dim();
  if (L.rows() != n || L.cols() != n) throw InvalidArgument("mgig: L has wrong shape");
  Eigen::LLT<Matrix> llt(symmetrize(L));
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) return kNegInf;
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Matrix l_inv = llt.solve(Matrix::Identity(n, n));
  return (params.nu - 0.5 * static_cast<double>(n + 1)) * log_det - 0.5 * ((params.B * L).trace() + (params.A * l_inv).trace());
}

Matrix mgig_mode(const MgigParams& params) {
  const auto n = params.dim();
  const double b = params.B.trace() / static_cast<double>(n);
  const double c = params.nu - 0.5 * static_cast<double>(n + 1);
  const Matrix root = psd_sqrt(c * c * Matrix::Identity(n, n) + b * symmetrize(params.A));
  return symmetrize((c * Matrix::Identity(n, n) + root) / b);
}

MgigChain sample_mgig_mcmc(const MgigParams& params, const MgigChainOptions& options, std::uint64_t seed) {
  params.validate();
  const auto n = params.dim();
  if (n < 2) throw InvalidArgument("mgig chain: use the scalar GIG sampler for n = 1");
  if (options.steps < 1 || options.burn_in < 0 || options.thin < 1) throw InvalidArgument("mgig chain: bad step counts");

  // Start at the mode, floored so the start is strictly PD even when A is rank deficient.
  const double b = params.B.trace() / static_cast<double>(n);
  auto start = symmetric_eigen(mgig_mode(params));
  for (Eigen::Index i = 0; i < n; ++i) start.values(i) = std::max(start.values(i), 0.5 / b);
  Vector theta = theta_from(start.vectors * start.values.asDiagonal() * start.vectors.transpose());
  double current = log_target(theta, params);

  Stream stream(seed);
  std::normal_distribution<double> normal;
  double step = options.initial_step;
  const auto dim = theta.size();

  auto propose = [&]() {
    Vector next = theta;
    for (Eigen::Index k = 0; k < dim; ++k) next(k) += step * normal(stream);
    const double value = log_target(next, params);
    if (std::log(stream.uniform()) < value - current) {
      theta = std::move(next);
      current = value;
      return true;
    }
    return false;
  };

  // Burn-in with windowed step adaptation toward the middle of the 20–40% band.
  constexpr std::int64_t kWindow = 100;
  std::int64_t window_accepts = 0;
  for (std::int64_t t = 1; t <= options.burn_in; ++t) {
    window_accepts += propose() ? 1 : 0;
    if (t % kWindow == 0) {
      const double rate = static_cast<double>(window_accepts) / kWindow;
      if (rate < 0.2) step *= 0.7;
      else if (rate > 0.4) step *= 1.3;
      window_accepts = 0;
    }
  }

  MgigChain chain;
  chain.step_size = step;
  std::int64_t accepts = 0;
  chain.samples.reserve(static_cast<std::size_t>(options.steps / options.thin));
  for (std::int64_t t = 1; t <= options.steps; ++t) {
    accepts += propose() ? 1 : 0;
    if (t % options.thin == 0) {
      const Matrix c = factor_from(theta, n);
      chain.samples.push_back(c * c.transpose());
    }
  }
  chain.acceptance_rate = static_cast<double>(accepts) / static_cast<double>(options.steps);
  if (chain.acceptance_rate < 0.01) {
    throw EstimatorDiagnostic("mgig chain: acceptance rate " + std::to_string(chain.acceptance_rate) +
                              " below 1% after tuning");
  }

  // Batch-means ESS per coordinate (50 batches).
  const auto m = static_cast<Eigen::Index>(chain.samples.size());
  const Eigen::Index coords = n * (n + 1) / 2;
  chain.ess = Vector::Constant(coords, std::numeric_limits<double>::quiet_NaN());
  constexpr Eigen::Index kBatches = 50;
  if (m >= 2 * kBatches) {
    const Eigen::Index size = m / kBatches;
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j, ++k) {
        Vector x(kBatches * size);
        for (Eigen::Index s = 0; s < x.size(); ++s) x(s) = chain.samples[static_cast<std::size_t>(s)](i, j);
        const double mean = x.mean();
        const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
        double bvar = 0.0;
        for (Eigen::Index bi = 0; bi < kBatches; ++bi) {
          const double bm = x.segment(bi * size, size).mean();
          bvar += (bm - mean) * (bm - mean);
        }
        bvar = bvar / static_cast<double>(kBatches - 1) * static_cast<double>(size);
        chain.ess(k) = bvar > 0.0 ? static_cast<double>(x.size()) * var / bvar : static_cast<double>(x.size());
      }
    }
  }
  return chain;
}

}  // namespace lbnn
