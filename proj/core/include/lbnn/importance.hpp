#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "lbnn/linalg.hpp"

namespace lbnn {

/// Settings shared by the self-normalized importance-sampling estimators.
struct SamplingOptions {
  int workers = 0;             // ≤ 0: default_workers()
  double ess_floor = 10.0;     // below this the estimator refuses to report
  int jackknife_blocks = 20;   // delete-one-block jackknife
  std::int64_t chunk_size = 2048;
};

/// Running weighted sums Σw, Σw², Σw·f, Σw·f_h f_hᵀ in a log-shifted frame, where f_h
/// is the leading `outer_dim` entries of the statistic vector f.
class WeightedSums {
 public:
  WeightedSums() = default;
  WeightedSums(Eigen::Index stat_dim, Eigen::Index outer_dim);

  void add(double log_weight, const Vector& stats);
  void merge(const WeightedSums& other);

  bool empty() const { return count_ == 0; }
  std::int64_t count() const { return count_; }
  /// log Σw.
  double log_total_weight() const;
  /// (Σw)² / Σw².
  double ess() const;
  /// Σw f / Σw.
  Vector mean() const;
  /// Σw f_h f_hᵀ / Σw.
  Matrix outer_mean() const;

 private:
  void rescale_to(double new_shift);

  double shift_ = 0.0;
  std::int64_t count_ = 0;
  double w_ = 0.0;
  double w2_ = 0.0;
  Vector wf_;
  Matrix wff_;
};

/// One importance draw: log weight plus the statistic vector.
struct WeightedDraw {
  double log_weight;
  Vector stats;
};

/// Draw i must depend only on (seed, i); the callback receives i and returns the draw.
using DrawFunction = std::function<WeightedDraw(std::int64_t index)>;

/// Evaluates `num_samples` draws in fixed-size chunks on a worker pool and reduces them
/// into `blocks` contiguous jackknife blocks. The reduction order is fixed, so the result
/// is bit-identical for any worker count.
std::vector<WeightedSums> accumulate_blocks(std::int64_t num_samples, Eigen::Index stat_dim, Eigen::Index outer_dim,
                                            const DrawFunction& draw, const SamplingOptions& options);

WeightedSums merge_all(const std::vector<WeightedSums>& blocks, std::ptrdiff_t skip = -1);

struct JackknifeResult {
  Vector estimate;
  Vector standard_error;
};

/// Delete-one-block jackknife standard error of an arbitrary functional of the weighted sums.
JackknifeResult jackknife(const std::vector<WeightedSums>& blocks,
                          const std::function<Vector(const WeightedSums&)>& functional);

/// log Σ exp(x_i) for a running sequence.
class LogSumExp {
 public:
  void add(double x);
  void merge(const LogSumExp& other);
  double value() const;

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

}  // namespace lbnn
