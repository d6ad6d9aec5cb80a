#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lbnn/dataset.hpp"

namespace lbnn::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kEstimatorDiagnostic = 2, kVerificationFailure = 3 };

/// Synthetic dataset recipe: Gaussian inputs, targets from a linear teacher Y = X W*/√n₀.
/// "orthogonal" rescales orthonormal rows so G_xx = I; "noisy" adds N(0, noise²) to Y.
struct GeneratorSpec {
  std::string mode = "teacher";
  int p = 4;
  int p_hat = 2;
  int n0 = 8;
  int nd = 1;
  double noise = 0.1;
  std::optional<std::uint64_t> seed;  // falls back to the run seed

  bool operator==(const GeneratorSpec&) const = default;
};

struct RunConfig {
  std::string command;
  // Dataset source: matrix files, or a generator spec.
  std::optional<std::string> x, y, xhat, yhat;
  std::optional<GeneratorSpec> generate;
  // Network shape: explicit widths, or depth + hidden width around the data dimensions.
  std::vector<int> widths;
  std::optional<int> depth;
  std::optional<int> hidden_width;
  double beta = 1.0;
  // Estimators.
  std::int64_t samples = 100000;
  std::optional<std::uint64_t> seed;
  std::int64_t sweeps = 100000;
  std::int64_t burn_in = -1;
  double ess_floor = 10.0;
  // Kernel regimes.
  std::string regime = "monte_carlo";
  std::optional<double> alpha;
  std::optional<double> gamma;
  std::vector<int> sweep_n1;
  // verify only: β used by the oracle arms (negative control).
  std::optional<double> oracle_beta;
  // Output.
  std::string out_dir = ".";
  std::string format = "json";
  int workers = 0;

  bool operator==(const RunConfig&) const = default;
};

RunConfig config_from_text(const std::string& json_text);
std::string config_to_text(const RunConfig& config);

/// Throws InvalidArgument on inconsistent or missing settings (including a missing seed).
void validate(const RunConfig& config);

Dataset generate_dataset(const GeneratorSpec& spec, std::uint64_t fallback_seed);

int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_kernel(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_gen_data(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses flags (and an optional --config file; flags win), dispatches, and maps
/// exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lbnn::cli
