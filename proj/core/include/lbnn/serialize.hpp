#pragma once

#include <cstdint>
#include <string>

#include "lbnn/feature_kernel.hpp"
#include "lbnn/posterior_mixture.hpp"
#include "lbnn/zero_temp.hpp"

namespace lbnn::io {

/// A JSON number with 17 significant digits; non-finite values become null.
std::string json_number(double x);
std::string json_string(const std::string& s);

/// Builds a flat JSON object, one key per line, in insertion order.
class JsonObject {
 public:
  void raw(const std::string& key, const std::string& value);
  void matrix(const std::string& key, const Matrix& m);
  void number(const std::string& key, double x);
  void integer(const std::string& key, long long x);
  void unsigned_integer(const std::string& key, std::uint64_t x);
  void string(const std::string& key, const std::string& s);
  std::string finish() const;

 private:
  std::string text_;
  bool first_ = true;
};

/// {"mean", "cov", "mean_se", "cov_se", "ess", "samples", "seed"}; matrices use the
/// shared {"rows", "cols", "data"} layout.
std::string to_json(const PredictiveMoments& m);
PredictiveMoments predictive_from_json(const std::string& text);

/// {"regime_tag", "ess", "seed", "residual", "K", "se"}.
std::string to_json(const KernelEstimate& k, std::uint64_t seed);

/// {"mean_L", "mean_Linv", "se_L", "se_Linv", "samples", "seed", "acceptance_rate", "chain_ess"}.
std::string to_json(const ScaleMoments& m, std::uint64_t seed);

}  // namespace lbnn::io
