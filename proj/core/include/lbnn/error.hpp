#pragma once

#include <stdexcept>
#include <string>

namespace lbnn {

/// Bad input: shapes, parameter domains, ill-conditioned Gram matrices.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An estimator or sampler ran but its own diagnostics say the result is unusable
/// (degenerate importance weights, a chain that does not move, ...).
class EstimatorDiagnostic : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown inside an otherwise valid computation (failed Cholesky, overflow).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lbnn
