#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "lbnn/linalg.hpp"

namespace lbnn {

/// Training inputs/targets and test inputs (optionally test targets).
///
/// X is p × n₀, Y is p × n_d, Xhat is p̂ × n₀, Yhat is p̂ × n_d.
struct Dataset {
  Matrix X;
  Matrix Y;
  Matrix Xhat;
  std::optional<Matrix> Yhat;

  Eigen::Index p() const { return X.rows(); }
  Eigen::Index p_hat() const { return Xhat.rows(); }
  Eigen::Index n0() const { return X.cols(); }
  Eigen::Index nd() const { return Y.cols(); }

  /// Throws InvalidArgument on shape mismatch, p < 1, n₀ < p, or non-finite entries.
  void validate() const;

  /// The same data with the test set replaced by the training inputs (and targets).
  Dataset training_as_test() const;
};

/// Normalized Gram matrices of a dataset.
struct GramSet {
  Matrix Gxx;    // p × p, PD
  Matrix Gxxh;   // p × p̂
  Matrix Gxhxh;  // p̂ × p̂
  Matrix Gyy;    // p × p
  std::optional<Matrix> Gyhyh;

  Eigen::Index p() const { return Gxx.rows(); }
  Eigen::Index p_hat() const { return Gxhxh.rows(); }
};

/// Builds the Gram matrices XXᵀ/n₀, XX̂ᵀ/n₀, X̂X̂ᵀ/n₀, YYᵀ/n_d (and ŶŶᵀ/n_d).
///
/// Symmetric blocks are averaged with their transpose. Throws InvalidArgument when
/// cond(Gxx) exceeds `condition_cap`.
GramSet build_gram_set(const Dataset& ds, double condition_cap = kConditionCap);

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

/// Layer widths [n₀, n₁, …, n_d] and the inverse temperature β (may be +inf).
struct NetworkShape {
  std::vector<int> widths;
  double beta = 1.0;

  int depth() const { return static_cast<int>(widths.size()) - 1; }
  int n0() const { return widths.front(); }
  int nd() const { return widths.back(); }
  int width(int layer) const { return widths.at(static_cast<std::size_t>(layer)); }
  bool zero_temperature() const { return beta == kInfiniteBeta; }

  /// Throws InvalidArgument unless d ≥ 1, all widths ≥ 1, hidden widths ≥ n_d, β ≥ 0.
  void validate() const;
  /// validate() plus n₀ and n_d consistency with the dataset.
  void validate_against(const Dataset& ds) const;
};

}  // namespace lbnn
