#pragma once

#include <functional>

#include "lbnn/linalg.hpp"

namespace lbnn {

/// Expectations under an unnormalized density exp(log_density(x)) on (0, ∞).
///
/// The constructor locates the bulk of the mass on a logarithmic grid and places
/// breakpoints there; integrals are then adaptive Gauss–Kronrod on each piece plus the
/// two tails, so sharply peaked densities (e.g. Gamma(512, 1/512)) are handled.
class HalfLineExpectation {
 public:
  explicit HalfLineExpectation(std::function<double(double)> log_density, double tolerance = 1e-12);

  /// E[f(X)] for a vector-valued integrand of fixed length `dim`.
  Vector expect(const std::function<Vector(double)>& f, Eigen::Index dim) const;
  double expect(const std::function<double(double)>& f) const;

  /// log ∫ exp(log_density).
  double log_normalizer() const { return log_normalizer_; }
  double mode() const { return mode_; }

 private:
  Vector integrate(const std::function<Vector(double)>& f, Eigen::Index dim) const;

  std::function<double(double)> log_density_;
  double tolerance_;
  double mode_ = 1.0;
  double peak_ = 0.0;
  std::vector<double> breaks_;  // in log x
  double log_normalizer_ = 0.0;
};

}  // namespace lbnn
