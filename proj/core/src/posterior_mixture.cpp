#include "lbnn/posterior_mixture.hpp"

#include <cmath>
#include <string>

#include "lbnn/error.hpp"
#include "lbnn/parallel.hpp"
#include "lbnn/random.hpp"
#include "lbnn/scale_prior.hpp"

namespace lbnn {

namespace {

void require_finite_beta(double beta) {
  if (std::isnan(beta) || beta < 0.0) throw InvalidArgument("beta must be >= 0");
  if (std::isinf(beta)) throw InvalidArgument("beta = inf has no finite-temperature mixture; use the zero-temperature path");
}

void require_matching(const GramSet& grams, const Matrix& Y) {
  if (Y.rows() != grams.p()) throw InvalidArgument("Y rows do not match the training Gram matrix");
}

}  // namespace

struct ScaleMixture::Solve {
  Vector e;    // eigenvalues of L
  Matrix V;    // eigenvectors of L
  Matrix phi;  // 1 + β d_i e_j
  Matrix R;    // (Uᵀ Y V) ./ phi, so that Γ⁻¹ vec Y = vec(U R Vᵀ)
  double log_weight;
};

ScaleMixture::ScaleMixture(const GramSet& grams, const Matrix& Y, double beta)
    : grams_(grams), Y_(Y), beta_(beta) {
  require_finite_beta(beta);
  require_matching(grams, Y);
  const auto eig = symmetric_eigen(grams.Gxx);
  d_ = eig.values;
  U_ = eig.vectors;
  UtY_ = U_.transpose() * Y_;
  C_ = grams.Gxxh.transpose() * U_;
}

ScaleMixture::Solve ScaleMixture::solve(const Matrix& L) const {
  const auto nd = Y_.cols();
  if (L.rows() != nd || L.cols() != nd) throw InvalidArgument("L must be nd x nd");
  if (relative_asymmetry(L) > 1e-8) throw InvalidArgument("L is not symmetric");
  Solve s;
  if (nd == 1) {
    s.e = Vector::Constant(1, L(0, 0));
    s.V = Matrix::Ones(1, 1);
  } else {
    auto eig = symmetric_eigen(L);
    s.e = std::move(eig.values);
    s.V = std::move(eig.vectors);
  }
  if (!(s.e.minCoeff() > 0.0)) throw InvalidArgument("L is singular");
  s.phi = (beta_ * d_ * s.e.transpose()).array() + 1.0;
  const Matrix rotated = nd == 1 ? UtY_ : Matrix(UtY_ * s.V);
  s.R = rotated.cwiseQuotient(s.phi);
  s.log_weight = -0.5 * s.phi.array().log().sum() - 0.5 * beta_ * rotated.cwiseProduct(s.R).sum();
  return s;
}

double ScaleMixture::log_rho_weight(const Matrix& L) const { return solve(L).log_weight; }

ScaleMixture::Component ScaleMixture::component(const Matrix& L, bool with_sigma) const {
  const Solve s = solve(L);
  const auto nd = Y_.cols();
  const auto ph = C_.rows();
  Component out;
  out.log_rho_weight = s.log_weight;
  out.mean = beta_ * C_ * s.R * s.e.asDiagonal() * s.V.transpose();
  if (!with_sigma) return out;
  out.Sigma = Matrix::Zero(ph * nd, ph * nd);
  for (Eigen::Index j = 0; j < nd; ++j) {
    const double ej = s.e(j);
    const Vector shrink = (beta_ * ej * ej) * s.phi.col(j).cwiseInverse();
    const Matrix block = ej * grams_.Gxhxh - C_ * shrink.asDiagonal() * C_.transpose();
    const Matrix channel = s.V.col(j) * s.V.col(j).transpose();
    out.Sigma += kron(block, channel);
  }
  out.Sigma = symmetrize(out.Sigma);
  return out;
}

std::pair<Matrix, double> ScaleMixture::delta_and_weight(const Matrix& L) const {
  const Solve s = solve(L);
  // Δ = U [β² D R E Rᵀ D − β diag(d_i² Σ_j e_j / φ_ij)] Uᵀ
  const Matrix dr = d_.asDiagonal() * s.R;
  Matrix inner = (beta_ * beta_) * dr * s.e.asDiagonal() * dr.transpose();
  const Vector h = s.phi.cwiseInverse() * s.e;
  inner.diagonal() -= beta_ * d_.cwiseAbs2().cwiseProduct(h);
  return {symmetrize(U_ * inner * U_.transpose()), s.log_weight};
}

Matrix ScaleMixture::delta(const Matrix& L) const { return delta_and_weight(L).first; }

GPComponents gp_components(const GramSet& grams, const Matrix& L, double beta, const Matrix& Y) {
  const ScaleMixture mixture(grams, Y, beta);
  auto c = mixture.component(L);
  GPComponents out;
  out.Gamma = Matrix::Identity(grams.p() * Y.cols(), grams.p() * Y.cols()) + beta * kron(grams.Gxx, L);
  out.Sigma = std::move(c.Sigma);
  out.mu = vec_rows(c.mean);
  out.log_rho_weight = c.log_rho_weight;
  return out;
}

GPComponents gp_components_scalar(const GramSet& grams, double lambda, double beta, const Vector& y) {
  require_finite_beta(beta);
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (y.size() != grams.p()) throw InvalidArgument("gp_components_scalar requires nd = 1 (y of length p)");
  const auto p = grams.p();
  GPComponents out;
  out.Gamma = Matrix::Identity(p, p) + beta * lambda * grams.Gxx;
  const Eigen::LLT<Matrix> llt(out.Gamma);
  if (llt.info() != Eigen::Success) throw NumericalError("Gamma_lambda is not positive definite");
  const Vector gy = llt.solve(y);
  const Matrix gb = llt.solve(grams.Gxxh);
  out.mu = lambda * beta * grams.Gxxh.transpose() * gy;
  out.Sigma = symmetrize(lambda * grams.Gxhxh - beta * lambda * lambda * grams.Gxxh.transpose() * gb);
  out.log_rho_weight = -llt.matrixLLT().diagonal().array().log().sum() - 0.5 * beta * y.dot(gy);
  return out;
}

Matrix clamp_covariance(const Matrix& cov) {
  const Matrix sym = symmetrize(cov);
  const double tol = 1e-8 * std::abs(sym.trace());
  try {
    return clamp_psd(sym, tol);
  } catch (const InvalidArgument& e) {
    throw EstimatorDiagnostic(std::string("predictive covariance is not PSD (insufficient ESS?): ") + e.what());
  }
}

PredictiveMoments predictive_moments(const Dataset& ds, const NetworkShape& shape, std::int64_t num_samples,
                                     std::uint64_t seed, const SamplingOptions& options) {
  shape.validate_against(ds);
  require_finite_beta(shape.beta);
  if (num_samples < 2) throw InvalidArgument("predictive_moments: need at least 2 samples");
  const GramSet grams = build_gram_set(ds);
  const ScaleMixture mixture(grams, ds.Y, shape.beta);
  const auto ph = ds.p_hat();
  const auto nd = ds.nd();
  const auto k = ph * nd;

  PredictiveMoments out;
  out.samples = num_samples;
  out.seed = seed;

  if (shape.depth() == 1) {
    const auto c = mixture.component(Matrix::Identity(nd, nd));
    out.mean = c.mean;
    out.cov = clamp_covariance(c.Sigma);
    out.mean_se = Matrix::Zero(ph, nd);
    out.cov_se = Matrix::Zero(k, k);
    out.ess = static_cast<double>(num_samples);
    return out;
  }

  const auto draw = [&](std::int64_t i) {
    Stream stream(seed, static_cast<std::uint64_t>(i));
    const Matrix L = draw_scale(shape, stream);
    const auto c = mixture.component(L);
    WeightedDraw d{c.log_rho_weight, Vector(k + k * k)};
    d.stats.head(k) = vec_rows(c.mean);
    d.stats.tail(k * k) = c.Sigma.reshaped();
    return d;
  };
  const auto blocks = accumulate_blocks(num_samples, k + k * k, k, draw, options);
  const auto functional = [k](const WeightedSums& sums) {
    const Vector m = sums.mean();
    const Vector mu = m.head(k);
    const Matrix cov = m.tail(k * k).reshaped(k, k) + sums.outer_mean() - mu * mu.transpose();
    Vector f(k + k * k);
    f.head(k) = mu;
    f.tail(k * k) = cov.reshaped();
    return f;
  };
  const auto jk = jackknife(blocks, functional);
  out.ess = merge_all(blocks).ess();
  if (out.ess < options.ess_floor) {
    throw EstimatorDiagnostic("importance weights degenerate: ESS = " + std::to_string(out.ess) + " < floor " +
                              std::to_string(options.ess_floor) +
                              "; increase --samples or use the zero-temperature path");
  }
  out.mean = unvec_rows(jk.estimate.head(k), ph, nd);
  out.mean_se = unvec_rows(jk.standard_error.head(k), ph, nd);
  out.cov = clamp_covariance(jk.estimate.tail(k * k).reshaped(k, k));
  out.cov_se = symmetrize(jk.standard_error.tail(k * k).reshaped(k, k));
  return out;
}

double log_mgf(const Dataset& ds, const NetworkShape& shape, const Matrix& J, std::int64_t num_samples,
               std::uint64_t seed, const SamplingOptions& options) {
  shape.validate_against(ds);
  require_finite_beta(shape.beta);
  if (J.rows() != ds.p_hat() || J.cols() != ds.nd()) throw InvalidArgument("log_mgf: J must be p_hat x nd");
  if (num_samples < 1) throw InvalidArgument("log_mgf: need at least 1 sample");
  const GramSet grams = build_gram_set(ds);
  const ScaleMixture mixture(grams, ds.Y, shape.beta);
  const Vector j = vec_rows(J);
  constexpr double kOverflow = 700.0;

  const auto exponent = [&](const ScaleMixture::Component& c) {
    const double a = vec_rows(c.mean).dot(j) + 0.5 * j.dot(c.Sigma * j);
    if (!(std::abs(a) <= kOverflow)) {
      throw NumericalError("log_mgf: per-sample exponent " + std::to_string(a) + " exceeds overflow guard");
    }
    return a;
  };

  if (shape.depth() == 1) return exponent(mixture.component(Matrix::Identity(ds.nd(), ds.nd())));

  const std::int64_t chunk = std::max<std::int64_t>(1, options.chunk_size);
  const auto num_chunks = static_cast<std::size_t>((num_samples + chunk - 1) / chunk);
  std::vector<LogSumExp> base(num_chunks);
  std::vector<LogSumExp> tilted(num_chunks);
  parallel_for(num_chunks, options.workers, [&](std::size_t c) {
    const std::int64_t begin = static_cast<std::int64_t>(c) * chunk;
    const std::int64_t end = std::min(num_samples, begin + chunk);
    for (std::int64_t i = begin; i < end; ++i) {
      Stream stream(seed, static_cast<std::uint64_t>(i));
      const auto comp = mixture.component(draw_scale(shape, stream));
      base[c].add(comp.log_rho_weight);
      tilted[c].add(comp.log_rho_weight + exponent(comp));
    }
  });
  LogSumExp total_base;
  LogSumExp total_tilted;
  for (std::size_t c = 0; c < num_chunks; ++c) {
    total_base.merge(base[c]);
    total_tilted.merge(tilted[c]);
  }
  return total_tilted.value() - total_base.value();
}

}  // namespace lbnn
