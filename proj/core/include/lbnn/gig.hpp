#pragma once

#include <cstdint>

#include "lbnn/random.hpp"

namespace lbnn {

/// Generalized inverse Gaussian law with density ∝ x^{ν−1} exp(−(χ/x + ψx)/2) on x > 0.
struct GigParams {
  double nu;
  double chi;
  double psi;

  /// Throws InvalidArgument outside the proper domain: χ, ψ ≥ 0, not both zero,
  /// ν > 0 when χ = 0, ν < 0 when ψ = 0.
  void validate() const;
  /// Unnormalized log density.
  double log_density(double x) const;
};

/// Exact GIG draw. Uses ratio-of-uniforms (with mode shift when ν or √(χψ) is large),
/// the Hörmann–Leydold hat for the small-ν, small-√(χψ) corner, and Gamma /
/// inverse-Gamma draws for the degenerate boundaries.
double draw_gig(const GigParams& params, Stream& stream);

/// Seeded convenience form.
double sample_gig(double nu, double chi, double psi, std::uint64_t seed);

}  // namespace lbnn
