#include "lbnn/importance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lbnn/error.hpp"
#include "lbnn/parallel.hpp"

namespace lbnn {

WeightedSums::WeightedSums(Eigen::Index stat_dim, Eigen::Index outer_dim)
    : wf_(Vector::Zero(stat_dim)), wff_(Matrix::Zero(outer_dim, outer_dim)) {}

void WeightedSums::rescale_to(double new_shift) {
  const double factor = std::exp(shift_ - new_shift);
  w_ *= factor;
  w2_ *= factor * factor;
  wf_ *= factor;
  wff_ *= factor;
  shift_ = new_shift;
}

void WeightedSums::add(double log_weight, const Vector& stats) {
  if (!std::isfinite(log_weight)) {
    if (log_weight == -std::numeric_limits<double>::infinity()) {
      ++count_;
      return;
    }
    throw NumericalError("importance weight is not finite");
  }
  if (count_ == 0 || w_ == 0.0) {
    shift_ = log_weight;
  } else if (log_weight > shift_) {
    rescale_to(log_weight);
  }
  const double w = std::exp(log_weight - shift_);
  ++count_;
  w_ += w;
  w2_ += w * w;
  wf_.noalias() += w * stats;
  const auto h = wff_.rows();
  if (h > 0) wff_.noalias() += w * stats.head(h) * stats.head(h).transpose();
}

void WeightedSums::merge(const WeightedSums& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  if (other.w_ == 0.0) {
    count_ += other.count_;
    return;
  }
  if (w_ == 0.0) {
    const auto c = count_;
    *this = other;
    count_ += c;
    return;
  }
  WeightedSums rhs = other;
  const double shift = std::max(shift_, rhs.shift_);
  rescale_to(shift);
  rhs.rescale_to(shift);
  count_ += rhs.count_;
  w_ += rhs.w_;
  w2_ += rhs.w2_;
  wf_ += rhs.wf_;
  wff_ += rhs.wff_;
}

double WeightedSums::log_total_weight() const {
  if (w_ == 0.0) return -std::numeric_limits<double>::infinity();
  return shift_ + std::log(w_);
}

double WeightedSums::ess() const { return w2_ > 0.0 ? w_ * w_ / w2_ : 0.0; }

Vector WeightedSums::mean() const {
  if (w_ == 0.0) throw EstimatorDiagnostic("all importance weights are zero");
  return wf_ / w_;
}

Matrix WeightedSums::outer_mean() const {
  if (w_ == 0.0) throw EstimatorDiagnostic("all importance weights are zero");
  return wff_ / w_;
}

std::vector<WeightedSums> accumulate_blocks(std::int64_t num_samples, Eigen::Index stat_dim, Eigen::Index outer_dim,
                                            const DrawFunction& draw, const SamplingOptions& options) {
  if (num_samples < 1) throw InvalidArgument("need at least one sample");
  const auto num_blocks = std::min<std::int64_t>(std::max(1, options.jackknife_blocks), num_samples);
  const auto chunk = std::max<std::int64_t>(1, options.chunk_size);

  struct Chunk {
    std::int64_t begin, end, block;
  };
  std::vector<Chunk> chunks;
  for (std::int64_t b = 0; b < num_blocks; ++b) {
    const std::int64_t begin = b * num_samples / num_blocks;
    const std::int64_t end = (b + 1) * num_samples / num_blocks;
    for (std::int64_t s = begin; s < end; s += chunk) chunks.push_back({s, std::min(end, s + chunk), b});
  }

  std::vector<WeightedSums> partial(chunks.size(), WeightedSums(stat_dim, outer_dim));
  parallel_for(chunks.size(), options.workers, [&](std::size_t c) {
    for (std::int64_t i = chunks[c].begin; i < chunks[c].end; ++i) {
      const WeightedDraw d = draw(i);
      partial[c].add(d.log_weight, d.stats);
    }
  });

  std::vector<WeightedSums> blocks(static_cast<std::size_t>(num_blocks), WeightedSums(stat_dim, outer_dim));
  for (std::size_t c = 0; c < chunks.size(); ++c) blocks[static_cast<std::size_t>(chunks[c].block)].merge(partial[c]);
  return blocks;
}

WeightedSums merge_all(const std::vector<WeightedSums>& blocks, std::ptrdiff_t skip) {
  WeightedSums out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (static_cast<std::ptrdiff_t>(b) == skip) continue;
    out.merge(blocks[b]);
  }
  return out;
}

JackknifeResult jackknife(const std::vector<WeightedSums>& blocks,
                          const std::function<Vector(const WeightedSums&)>& functional) {
  JackknifeResult result;
  result.estimate = functional(merge_all(blocks));
  const auto b = static_cast<std::ptrdiff_t>(blocks.size());
  if (b < 2) {
    result.standard_error = Vector::Constant(result.estimate.size(), std::numeric_limits<double>::quiet_NaN());
    return result;
  }
  std::vector<Vector> leave_out;
  leave_out.reserve(blocks.size());
  Vector average = Vector::Zero(result.estimate.size());
  for (std::ptrdiff_t k = 0; k < b; ++k) {
    leave_out.push_back(functional(merge_all(blocks, k)));
    average += leave_out.back();
  }
  average /= static_cast<double>(b);
  Vector ss = Vector::Zero(result.estimate.size());
  for (const auto& v : leave_out) ss += (v - average).cwiseAbs2();
  result.standard_error = (ss * (static_cast<double>(b - 1) / static_cast<double>(b))).cwiseSqrt();
  return result;
}

void LogSumExp::add(double x) {
  if (x == -std::numeric_limits<double>::infinity()) return;
  if (x > max_) {
    sum_ = sum_ * std::exp(max_ - x) + 1.0;
    max_ = x;
  } else {
    sum_ += std::exp(x - max_);
  }
}

void LogSumExp::merge(const LogSumExp& other) {
  if (other.sum_ == 0.0) return;
  if (sum_ == 0.0) {
    *this = other;
    return;
  }
  const double m = std::max(max_, other.max_);
  sum_ = sum_ * std::exp(max_ - m) + other.sum_ * std::exp(other.max_ - m);
  max_ = m;
}

double LogSumExp::value() const {
  if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
  return max_ + std::log(sum_);
}

}  // namespace lbnn
