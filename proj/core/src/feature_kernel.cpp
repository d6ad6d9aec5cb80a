#include "lbnn/feature_kernel.hpp"

#include <array>
#include <cmath>

#include "lbnn/error.hpp"
#include "lbnn/posterior_mixture.hpp"
#include "lbnn/random.hpp"
#include "lbnn/scale_prior.hpp"

namespace lbnn {

namespace {

constexpr std::array<std::pair<Regime, std::string_view>, 6> kRegimeNames{{
    {Regime::monte_carlo, "monte_carlo"},
    {Regime::zero_temp, "zero_temp"},
    {Regime::wide, "wide"},
    {Regime::large_p, "large_p"},
    {Regime::li_sompolinsky, "li_sompolinsky"},
    {Regime::aitchison, "aitchison"},
}};

}  // namespace

std::string_view to_string(Regime regime) {
  for (const auto& [r, name] : kRegimeNames) {
    if (r == regime) return name;
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  for (const auto& [r, n] : kRegimeNames) {
    if (n == name) return r;
  }
  throw InvalidArgument("unknown regime '" + std::string(name) + "'");
}

Matrix delta_of_L(const GramSet& grams, const Matrix& Y, const Matrix& L, double beta) {
  return ScaleMixture(grams, Y, beta).delta(L);
}

Matrix delta_scalar(const GramSet& grams, const Vector& y, double lambda, double beta) {
  if (y.size() != grams.p()) throw InvalidArgument("delta_scalar: y must have length p");
  const auto p = grams.p();
  const Matrix gamma = Matrix::Identity(p, p) + beta * lambda * grams.Gxx;
  const Eigen::LLT<Matrix> llt(gamma);
  if (llt.info() != Eigen::Success) throw NumericalError("delta_scalar: Gamma_lambda not PD");
  const Vector m = grams.Gxx * llt.solve(y);
  const Matrix ggg = grams.Gxx * llt.solve(grams.Gxx);
  return symmetrize(lambda * beta * beta * m * m.transpose() - lambda * beta * ggg);
}

KernelEstimate mean_kernel(const Dataset& ds, const NetworkShape& shape, std::int64_t num_samples,
                           std::uint64_t seed, const SamplingOptions& options) {
  shape.validate_against(ds);
  if (std::isinf(shape.beta)) throw InvalidArgument("mean_kernel needs finite beta; use zt_mean_kernel");
  if (num_samples < 2) throw InvalidArgument("mean_kernel: need at least 2 samples");
  const GramSet grams = build_gram_set(ds);
  const auto p = grams.p();

  KernelEstimate out;
  out.regime = Regime::monte_carlo;
  if (shape.beta == 0.0 || shape.depth() == 1) {
    out.K = grams.Gxx;
    out.se = Matrix::Zero(p, p);
    out.ess = static_cast<double>(num_samples);
    return out;
  }

  const ScaleMixture mixture(grams, ds.Y, shape.beta);
  const auto draw = [&](std::int64_t i) {
    Stream stream(seed, static_cast<std::uint64_t>(i));
    auto [delta, log_weight] = mixture.delta_and_weight(draw_scale(shape, stream));
    return WeightedDraw{log_weight, delta.reshaped()};
  };
  const auto blocks = accumulate_blocks(num_samples, p * p, 0, draw, options);
  const auto jk = jackknife(blocks, [](const WeightedSums& s) { return s.mean(); });
  out.ess = merge_all(blocks).ess();
  if (out.ess < options.ess_floor) {
    throw EstimatorDiagnostic("importance weights degenerate: ESS = " + std::to_string(out.ess) +
                              "; increase --samples or use the zero-temperature path");
  }
  const double inv_n1 = 1.0 / static_cast<double>(shape.width(1));
  out.K = symmetrize(grams.Gxx + inv_n1 * jk.estimate.reshaped(p, p));
  out.se = symmetrize(inv_n1 * jk.standard_error.reshaped(p, p));
  return out;
}

KernelEstimate zt_mean_kernel(const Dataset& ds, const NetworkShape& shape, const ScaleMoments& moments) {
  shape.validate_against(ds);
  if (shape.depth() != 2) throw InvalidArgument("zt_mean_kernel: depth 2 only");
  require_interpolatable(ds);
  const auto nd = ds.nd();
  if (moments.mean_Linv.rows() != nd || moments.mean_Linv.cols() != nd || !moments.mean_Linv.allFinite()) {
    throw InvalidArgument("zt_mean_kernel: moments do not match nd");
  }
  if (relative_asymmetry(moments.mean_Linv) > 1e-8) throw InvalidArgument("zt_mean_kernel: E[L^-1] not symmetric");
  const GramSet grams = build_gram_set(ds);
  const double n1 = shape.width(1);
  KernelEstimate out;
  out.regime = Regime::zero_temp;
  out.K = symmetrize(grams.Gxx + (ds.Y * moments.mean_Linv * ds.Y.transpose() - static_cast<double>(nd) * grams.Gxx) / n1);
  // Entrywise propagation treating the entries of E[L⁻¹] as independent.
  const auto p = grams.p();
  out.se = Matrix::Zero(p, p);
  if (moments.se_Linv.size() == nd * nd) {
    const Matrix var = moments.se_Linv.cwiseAbs2();
    for (Eigen::Index a = 0; a < p; ++a) {
      for (Eigen::Index b = 0; b < p; ++b) {
        double v = 0.0;
        for (Eigen::Index j = 0; j < nd; ++j) {
          for (Eigen::Index k = 0; k < nd; ++k) v += std::pow(ds.Y(a, j) * ds.Y(b, k), 2) * var(j, k);
        }
        out.se(a, b) = std::sqrt(v) / n1;
      }
    }
  }
  out.ess = static_cast<double>(moments.samples);
  return out;
}

}  // namespace lbnn
