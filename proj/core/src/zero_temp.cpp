#include "lbnn/zero_temp.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "lbnn/error.hpp"
#include "lbnn/gig.hpp"
#include "lbnn/parallel.hpp"
#include "lbnn/random.hpp"

namespace lbnn {

namespace {

constexpr int kChains = 4;
constexpr Eigen::Index kBatches = 50;

Matrix solve_gxx(const GramSet& grams, const Matrix& rhs) {
  require_positive_definite(grams.Gxx, "Gxx");
  return Eigen::LLT<Matrix>(grams.Gxx).solve(rhs);
}

// Batch-means standard error of each entry across a sequence of equally sized matrices.
Matrix batch_means_se(const std::vector<Matrix>& xs, Eigen::Index batches) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index size = n / batches;
  if (size < 1) throw EstimatorDiagnostic("too few samples for batch-means standard errors");
  std::vector<Matrix> means(static_cast<std::size_t>(batches), Matrix::Zero(xs.front().rows(), xs.front().cols()));
  Matrix grand = Matrix::Zero(xs.front().rows(), xs.front().cols());
  for (Eigen::Index b = 0; b < batches; ++b) {
    for (Eigen::Index s = b * size; s < (b + 1) * size; ++s) means[b] += xs[static_cast<std::size_t>(s)];
    means[b] /= static_cast<double>(size);
    grand += means[b];
  }
  grand /= static_cast<double>(batches);
  Matrix var = Matrix::Zero(grand.rows(), grand.cols());
  for (const auto& m : means) var += (m - grand).cwiseAbs2();
  var /= static_cast<double>(batches - 1);
  return (var / static_cast<double>(batches)).cwiseSqrt();
}

}  // namespace

Matrix zt_mean(const GramSet& grams, const Matrix& Y) {
  if (Y.rows() != grams.p()) throw InvalidArgument("zt_mean: Y rows do not match Gxx");
  return grams.Gxxh.transpose() * solve_gxx(grams, Y);
}

Matrix zt_schur(const GramSet& grams) {
  const Matrix schur = grams.Gxhxh - grams.Gxxh.transpose() * solve_gxx(grams, grams.Gxxh);
  const double tol = 1e-8 * std::max(1.0, grams.Gxhxh.cwiseAbs().maxCoeff());
  // Round-off sized eigenvalues of either sign are set to zero, so X̂ = X gives exactly 0.
  const auto [values, vectors] = symmetric_eigen(symmetrize(schur));
  Vector kept = values;
  for (Eigen::Index i = 0; i < kept.size(); ++i) {
    if (kept(i) < -tol) throw InvalidArgument("zt_schur: Schur complement has a negative eigenvalue");
    if (std::abs(kept(i)) <= tol) kept(i) = 0.0;
  }
  if (kept.isZero(0.0)) return Matrix::Zero(schur.rows(), schur.cols());
  return symmetrize(vectors * kept.asDiagonal() * vectors.transpose());
}

Matrix zt_covariance(const GramSet& grams, const Matrix& mean_L) {
  if (mean_L.rows() != mean_L.cols()) throw InvalidArgument("zt_covariance: E L must be square");
  if (relative_asymmetry(mean_L) > 1e-8) throw InvalidArgument("zt_covariance: E L is not symmetric");
  return kron(zt_schur(grams), symmetrize(mean_L));
}

double interpolation_residual(const Dataset& ds) {
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(ds.X);
  return (ds.X * cod.solve(ds.Y) - ds.Y).norm();
}

void require_interpolatable(const Dataset& ds) {
  const double residual = interpolation_residual(ds);
  if (!(residual <= 1e-8 * std::max(1.0, ds.Y.norm()))) {
    throw InvalidArgument("zero temperature requires linearly interpolatable data (residual " +
                          std::to_string(residual) + ")");
  }
}

MgigParams zt_mgig_params(const GramSet& grams, const Matrix& Y, int n1) {
  MgigParams params;
  params.A = symmetrize(Y.transpose() * solve_gxx(grams, Y));
  params.B = static_cast<double>(n1) * Matrix::Identity(Y.cols(), Y.cols());
  params.nu = 0.5 * static_cast<double>(n1 - grams.p());
  return params;
}

ScaleMoments zt_scale_moments(const Dataset& ds, const NetworkShape& shape, std::int64_t num_samples,
                              std::uint64_t seed, const SamplingOptions& options) {
  shape.validate_against(ds);
  if (shape.depth() != 2) throw InvalidArgument("zero-temperature scale law is available for depth 2 only");
  if (!(shape.width(1) > ds.p())) throw InvalidArgument("zero-temperature scale law requires n1 > p (nu > 0)");
  if (num_samples < 2 * kBatches) {
    throw InvalidArgument("zt_scale_moments: need at least " + std::to_string(2 * kBatches) + " samples");
  }
  require_interpolatable(ds);
  const GramSet grams = build_gram_set(ds);
  const MgigParams params = zt_mgig_params(grams, ds.Y, shape.width(1));
  const auto nd = ds.nd();

  ScaleMoments out;
  out.samples = num_samples;

  if (nd == 1) {
    const GigParams gig{params.nu, params.A(0, 0), params.B(0, 0)};
    gig.validate();
    // iid draws, reduced in fixed chunk order.
    const std::int64_t chunk = std::max<std::int64_t>(1, options.chunk_size);
    const auto chunks = static_cast<std::size_t>((num_samples + chunk - 1) / chunk);
    std::vector<Eigen::Vector4d> partial(chunks, Eigen::Vector4d::Zero());
    parallel_for(chunks, options.workers, [&](std::size_t c) {
      const std::int64_t begin = static_cast<std::int64_t>(c) * chunk;
      const std::int64_t end = std::min(num_samples, begin + chunk);
      for (std::int64_t i = begin; i < end; ++i) {
        Stream stream(seed, static_cast<std::uint64_t>(i));
        const double x = draw_gig(gig, stream);
        partial[c] += Eigen::Vector4d(x, 1.0 / x, x * x, 1.0 / (x * x));
      }
    });
    Eigen::Vector4d sums = Eigen::Vector4d::Zero();
    for (const auto& s : partial) sums += s;
    const double n = static_cast<double>(num_samples);
    const double m1 = sums(0) / n;
    const double m2 = sums(1) / n;
    const double v1 = std::max(0.0, (sums(2) - n * m1 * m1) / (n - 1.0));
    const double v2 = std::max(0.0, (sums(3) - n * m2 * m2) / (n - 1.0));
    out.mean_L = Matrix::Constant(1, 1, m1);
    out.mean_Linv = Matrix::Constant(1, 1, m2);
    out.se_L = Matrix::Constant(1, 1, std::sqrt(v1 / n));
    out.se_Linv = Matrix::Constant(1, 1, std::sqrt(v2 / n));
    return out;
  }

  // Independent chains, each keeping num_samples / kChains thinned draws.
  const std::int64_t per_chain = num_samples / kChains;
  MgigChainOptions chain_options;
  chain_options.thin = 5;
  chain_options.steps = per_chain * chain_options.thin;
  chain_options.burn_in = std::max<std::int64_t>(2000, chain_options.steps / 10);
  std::vector<MgigChain> chains(kChains);
  parallel_for(kChains, options.workers, [&](std::size_t c) {
    chains[c] = sample_mgig_mcmc(params, chain_options, derive_seed(seed, c));
  });

  std::vector<Matrix> ls;
  std::vector<Matrix> inverses;
  double acceptance = 0.0;
  Vector ess = Vector::Zero(chains.front().ess.size());
  for (const auto& chain : chains) {
    for (const auto& l : chain.samples) {
      ls.push_back(l);
      inverses.push_back(symmetrize(Eigen::LLT<Matrix>(l).solve(Matrix::Identity(nd, nd))));
    }
    acceptance += chain.acceptance_rate / kChains;
    ess += chain.ess;
  }
  Matrix sum_l = Matrix::Zero(nd, nd);
  Matrix sum_inv = Matrix::Zero(nd, nd);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    sum_l += ls[i];
    sum_inv += inverses[i];
  }
  out.samples = static_cast<std::int64_t>(ls.size());
  out.mean_L = symmetrize(sum_l / static_cast<double>(ls.size()));
  out.mean_Linv = symmetrize(sum_inv / static_cast<double>(ls.size()));
  // Batches are laid out chain by chain, so no batch straddles two chains.
  out.se_L = batch_means_se(ls, kBatches * kChains);
  out.se_Linv = batch_means_se(inverses, kBatches * kChains);
  out.acceptance_rate = acceptance;
  out.chain_ess = ess;
  return out;
}

}  // namespace lbnn
