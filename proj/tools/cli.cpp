#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "lbnn/asymptotics.hpp"
#include "lbnn/error.hpp"
#include "lbnn/feature_kernel.hpp"
#include "lbnn/linalg.hpp"
#include "lbnn/matrix_io.hpp"
#include "lbnn/oracle.hpp"
#include "lbnn/parallel.hpp"
#include "lbnn/posterior_mixture.hpp"
#include "lbnn/random.hpp"
#include "lbnn/serialize.hpp"
#include "lbnn/zero_temp.hpp"

namespace lbnn::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kHugeBeta = 1e6;
constexpr double kInf = std::numeric_limits<double>::infinity();

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config text

double parse_beta(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("beta: expected a number or \"inf\", got \"" + text + "\"");
  }
  if (used != text.size()) throw InvalidArgument("beta: trailing characters in \"" + text + "\"");
  return v;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string(what) + ": bad integer list \"" + text + "\"");
    }
  }
  if (out.empty()) throw InvalidArgument(std::string(what) + ": empty list");
  return out;
}

json beta_to_json(double beta) { return std::isinf(beta) && beta > 0 ? json("inf") : json(beta); }

double beta_from_json(const json& j) {
  if (j.is_string()) return parse_beta(j.get<std::string>());
  if (j.is_number()) return j.get<double>();
  throw InvalidArgument("beta must be a number or \"inf\"");
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <class T>
void read_value(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  for (const auto& item : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return item.key() == k; })) {
      throw InvalidArgument(std::string("config: unknown key \"") + item.key() + "\" in " + where);
    }
  }
}

// ---------------------------------------------------------------- helpers

int cli_workers(const RunConfig& c) {
  if (const char* env = std::getenv("LBNN_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return c.workers > 0 ? c.workers : default_workers();
}

SamplingOptions sampling_options(const RunConfig& c) {
  SamplingOptions o;
  o.workers = cli_workers(c);
  o.ess_floor = c.ess_floor;
  return o;
}

std::uint64_t run_seed(const RunConfig& c) {
  if (!c.seed) throw InvalidArgument("a seed is required (--seed or \"seed\" in the config)");
  return *c.seed;
}

Dataset load_dataset(const RunConfig& c) {
  Dataset ds;
  if (c.x || c.y) {
    if (!c.x || !c.y) throw InvalidArgument("data: both --x and --y are required");
    ds.X = io::load(*c.x);
    ds.Y = io::load(*c.y);
    ds.Xhat = c.xhat ? io::load(*c.xhat) : ds.X;
    if (c.yhat) ds.Yhat = io::load(*c.yhat);
  } else if (c.generate) {
    ds = generate_dataset(*c.generate, run_seed(c));
  } else {
    throw InvalidArgument("no dataset: give --x/--y files or a generator (--mode)");
  }
  ds.validate();
  return ds;
}

NetworkShape resolve_shape(const RunConfig& c, const Dataset& ds, double beta) {
  NetworkShape shape;
  shape.beta = beta;
  if (!c.widths.empty()) {
    shape.widths = c.widths;
    if (c.depth && *c.depth != shape.depth()) throw InvalidArgument("--depth disagrees with --widths");
  } else {
    const int depth = c.depth.value_or(2);
    if (depth < 1) throw InvalidArgument("depth must be at least 1");
    if (depth > 1 && !c.hidden_width) throw InvalidArgument("depth >= 2 needs --hidden-width or --widths");
    shape.widths.push_back(static_cast<int>(ds.n0()));
    for (int l = 1; l < depth; ++l) shape.widths.push_back(*c.hidden_width);
    shape.widths.push_back(static_cast<int>(ds.nd()));
  }
  shape.validate();
  shape.validate_against(ds);
  return shape;
}

int hidden_width_of(const NetworkShape& shape) {
  if (shape.depth() < 2) throw InvalidArgument("this regime needs a hidden layer (depth >= 2)");
  return shape.width(1);
}

void warn_huge_beta(double beta, std::ostream& err) {
  if (std::isfinite(beta) && beta > kHugeBeta) {
    err << "warning: beta = " << io::format_double(beta)
        << " is finite but very large; importance weights may degenerate (use --beta inf for the zero-temperature path)\n";
  }
}

fs::path prepare_out_dir(const RunConfig& c) {
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

void write_table(const fs::path& dir, const std::string& name, const Matrix& m, const RunConfig& c) {
  io::save(dir / (name + "." + c.format), m);
}

std::string short_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// ---------------------------------------------------------------- verify internals

struct Arm {
  std::string name;
  PredictiveMoments predictive;
  std::optional<KernelEstimate> kernel;
};

struct Comparison {
  std::string arm_a, arm_b, quantity;
  double a, b, se, z;
  bool pass;
};

double z_score(double a, double b, double se_a, double se_b, double exact_tol) {
  const double diff = a - b;
  const double se = std::sqrt(se_a * se_a + se_b * se_b);
  if (!std::isfinite(se)) return kInf;
  if (se == 0.0) return std::abs(diff) <= exact_tol * std::max(1.0, std::abs(a)) ? 0.0 : std::copysign(kInf, diff);
  return diff / se;
}

void compare_arms(const Arm& x, const Arm& y, std::vector<Comparison>& out) {
  auto add = [&](const std::string& q, double a, double b, double sa, double sb) {
    const double se = std::sqrt(sa * sa + sb * sb);
    const double z = z_score(a, b, sa, sb, 1e-10);
    out.push_back({x.name, y.name, q, a, b, se, z, std::abs(z) <= 3.0});
  };
  const auto& pa = x.predictive;
  const auto& pb = y.predictive;
  for (Eigen::Index i = 0; i < pa.mean.rows(); ++i) {
    for (Eigen::Index j = 0; j < pa.mean.cols(); ++j) {
      add("mean[" + std::to_string(i) + "," + std::to_string(j) + "]", pa.mean(i, j), pb.mean(i, j), pa.mean_se(i, j),
          pb.mean_se(i, j));
    }
  }
  for (Eigen::Index i = 0; i < pa.cov.rows(); ++i) {
    for (Eigen::Index j = i; j < pa.cov.cols(); ++j) {
      add("cov[" + std::to_string(i) + "," + std::to_string(j) + "]", pa.cov(i, j), pb.cov(i, j), pa.cov_se(i, j),
          pb.cov_se(i, j));
    }
  }
  if (x.kernel && y.kernel) {
    const auto& ka = *x.kernel;
    const auto& kb = *y.kernel;
    for (Eigen::Index i = 0; i < ka.K.rows(); ++i) {
      for (Eigen::Index j = i; j < ka.K.cols(); ++j) {
        add("K[" + std::to_string(i) + "," + std::to_string(j) + "]", ka.K(i, j), kb.K(i, j), ka.se(i, j), kb.se(i, j));
      }
    }
  }
}

// Closed-form GP posterior of the network output at depth 1 (kernel G_xx, noise 1/β).
PredictiveMoments closed_form_gp(const Dataset& ds, double beta) {
  const GramSet g = build_gram_set(ds);
  Matrix a = g.Gxx;
  a.diagonal().array() += 1.0 / beta;
  const Eigen::LDLT<Matrix> ldlt(a);
  PredictiveMoments m;
  m.mean = g.Gxxh.transpose() * ldlt.solve(ds.Y);
  const Matrix cov = g.Gxhxh - g.Gxxh.transpose() * ldlt.solve(g.Gxxh);
  m.cov = kron(symmetrize(cov), Matrix::Identity(ds.nd(), ds.nd()));
  m.mean_se = Matrix::Zero(m.mean.rows(), m.mean.cols());
  m.cov_se = Matrix::Zero(m.cov.rows(), m.cov.cols());
  m.ess = kInf;
  return m;
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig config_from_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
  reject_unknown(j,
                 {"command", "data", "generate", "widths", "depth", "hidden_width", "beta", "samples", "seed", "sweeps",
                  "burn_in", "ess_floor", "regime", "alpha", "gamma", "sweep_n1", "oracle_beta", "out_dir", "format",
                  "workers"},
                 "config");
  RunConfig c;
  try {
    read_value(j, "command", c.command);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      reject_unknown(d, {"x", "y", "xhat", "yhat"}, "data");
      read_optional(d, "x", c.x);
      read_optional(d, "y", c.y);
      read_optional(d, "xhat", c.xhat);
      read_optional(d, "yhat", c.yhat);
    }
    if (j.contains("generate")) {
      const auto& g = j.at("generate");
      reject_unknown(g, {"mode", "p", "p_hat", "n0", "nd", "noise", "seed"}, "generate");
      GeneratorSpec spec;
      read_value(g, "mode", spec.mode);
      read_value(g, "p", spec.p);
      read_value(g, "p_hat", spec.p_hat);
      read_value(g, "n0", spec.n0);
      read_value(g, "nd", spec.nd);
      read_value(g, "noise", spec.noise);
      read_optional(g, "seed", spec.seed);
      c.generate = spec;
    }
    read_value(j, "widths", c.widths);
    read_optional(j, "depth", c.depth);
    read_optional(j, "hidden_width", c.hidden_width);
    if (j.contains("beta")) c.beta = beta_from_json(j.at("beta"));
    read_value(j, "samples", c.samples);
    read_optional(j, "seed", c.seed);
    read_value(j, "sweeps", c.sweeps);
    read_value(j, "burn_in", c.burn_in);
    read_value(j, "ess_floor", c.ess_floor);
    read_value(j, "regime", c.regime);
    read_optional(j, "alpha", c.alpha);
    read_optional(j, "gamma", c.gamma);
    read_value(j, "sweep_n1", c.sweep_n1);
    if (j.contains("oracle_beta") && !j.at("oracle_beta").is_null()) c.oracle_beta = beta_from_json(j.at("oracle_beta"));
    read_value(j, "out_dir", c.out_dir);
    read_value(j, "format", c.format);
    read_value(j, "workers", c.workers);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return c;
}

std::string config_to_text(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  json data = json::object();
  if (c.x) data["x"] = *c.x;
  if (c.y) data["y"] = *c.y;
  if (c.xhat) data["xhat"] = *c.xhat;
  if (c.yhat) data["yhat"] = *c.yhat;
  if (!data.empty()) j["data"] = data;
  if (c.generate) {
    const auto& g = *c.generate;
    json gj = {{"mode", g.mode}, {"p", g.p}, {"p_hat", g.p_hat}, {"n0", g.n0}, {"nd", g.nd}, {"noise", g.noise}};
    if (g.seed) gj["seed"] = *g.seed;
    j["generate"] = gj;
  }
  if (!c.widths.empty()) j["widths"] = c.widths;
  if (c.depth) j["depth"] = *c.depth;
  if (c.hidden_width) j["hidden_width"] = *c.hidden_width;
  j["beta"] = beta_to_json(c.beta);
  j["samples"] = c.samples;
  if (c.seed) j["seed"] = *c.seed;
  j["sweeps"] = c.sweeps;
  j["burn_in"] = c.burn_in;
  j["ess_floor"] = c.ess_floor;
  j["regime"] = c.regime;
  if (c.alpha) j["alpha"] = *c.alpha;
  if (c.gamma) j["gamma"] = *c.gamma;
  if (!c.sweep_n1.empty()) j["sweep_n1"] = c.sweep_n1;
  if (c.oracle_beta) j["oracle_beta"] = beta_to_json(*c.oracle_beta);
  j["out_dir"] = c.out_dir;
  j["format"] = c.format;
  j["workers"] = c.workers;
  return j.dump(2) + "\n";
}

void validate(const RunConfig& c) {
  static const std::vector<std::string> commands = {"predict", "kernel", "verify", "gen-data"};
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end()) {
    throw InvalidArgument("unknown command \"" + c.command + "\"");
  }
  run_seed(c);
  if (c.format != "json" && c.format != "csv") throw InvalidArgument("format must be json or csv");
  if (std::isnan(c.beta) || c.beta < 0.0) throw InvalidArgument("beta must be non-negative or inf");
  if (c.oracle_beta && (std::isnan(*c.oracle_beta) || *c.oracle_beta < 0.0)) {
    throw InvalidArgument("oracle_beta must be non-negative");
  }
  if (c.samples < 1) throw InvalidArgument("samples must be positive");
  if (c.sweeps < 1) throw InvalidArgument("sweeps must be positive");
  if (!(c.ess_floor >= 1.0)) throw InvalidArgument("ess_floor must be at least 1");
  if (c.workers < 0) throw InvalidArgument("workers must be non-negative");
  parse_regime(c.regime);
  if (c.alpha && !(*c.alpha >= 0.0)) throw InvalidArgument("alpha must be non-negative");
  if (c.gamma && !(*c.gamma >= 0.0)) throw InvalidArgument("gamma must be non-negative");
  for (const int n1 : c.sweep_n1) {
    if (n1 < 1) throw InvalidArgument("sweep_n1 entries must be positive");
  }
  if (!c.sweep_n1.empty() && c.regime != "monte_carlo") throw InvalidArgument("sweep_n1 needs --regime monte_carlo");
  if (c.x || c.y) {
    if (c.generate) throw InvalidArgument("give either data files or a generator, not both");
  } else if (!c.generate && c.command != "gen-data") {
    throw InvalidArgument("no dataset: give --x/--y files or a generator (--mode)");
  }
}

// ---------------------------------------------------------------- generator

Dataset generate_dataset(const GeneratorSpec& spec, std::uint64_t fallback_seed) {
  if (spec.mode != "teacher" && spec.mode != "orthogonal" && spec.mode != "noisy") {
    throw InvalidArgument("generator mode must be teacher, orthogonal or noisy");
  }
  if (spec.p < 1 || spec.p_hat < 1 || spec.n0 < 1 || spec.nd < 1) throw InvalidArgument("generator sizes must be positive");
  if (spec.p > spec.n0) throw InvalidArgument("generator: p > n0 gives a singular training Gram");
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) throw InvalidArgument("generator: noise must be finite, >= 0");

  const std::uint64_t seed = spec.seed.value_or(fallback_seed);
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols, std::uint64_t stream) {
    Stream s(seed, stream);
    std::normal_distribution<double> n01;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n01(s);
    }
    return m;
  };
  const double root_n0 = std::sqrt(static_cast<double>(spec.n0));

  Dataset ds;
  if (spec.mode == "orthogonal") {
    const Eigen::HouseholderQR<Matrix> qr(gaussian(spec.n0, spec.p, 0));
    const Matrix q = qr.householderQ() * Matrix::Identity(spec.n0, spec.p);
    ds.X = root_n0 * q.transpose();
  } else {
    ds.X = gaussian(spec.p, spec.n0, 0);
  }
  const Matrix teacher = gaussian(spec.n0, spec.nd, 1);
  ds.Xhat = gaussian(spec.p_hat, spec.n0, 2);
  ds.Y = ds.X * teacher / root_n0;
  Matrix yhat = ds.Xhat * teacher / root_n0;
  if (spec.mode == "noisy") {
    ds.Y += spec.noise * gaussian(spec.p, spec.nd, 3);
    yhat += spec.noise * gaussian(spec.p_hat, spec.nd, 4);
  }
  ds.Yhat = yhat;
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------- commands

int cmd_predict(const RunConfig& c, std::ostream& out, std::ostream& err) {
  validate(c);
  const std::uint64_t seed = run_seed(c);
  const Dataset ds = load_dataset(c);
  const NetworkShape shape = resolve_shape(c, ds, c.beta);
  warn_huge_beta(shape.beta, err);
  const fs::path dir = prepare_out_dir(c);

  PredictiveMoments pm;
  if (shape.zero_temperature()) {
    require_interpolatable(ds);
    const GramSet grams = build_gram_set(ds);
    const auto nd = ds.nd();
    pm.mean = zt_mean(grams, ds.Y);
    pm.mean_se = Matrix::Zero(pm.mean.rows(), pm.mean.cols());
    pm.seed = seed;
    if (shape.depth() == 1) {
      pm.cov = zt_covariance(grams, Matrix::Identity(nd, nd));
      pm.cov_se = Matrix::Zero(pm.cov.rows(), pm.cov.cols());
      pm.ess = kInf;
    } else if (shape.depth() == 2) {
      const ScaleMoments sm = zt_scale_moments(ds, shape, c.samples, seed, sampling_options(c));
      write_text(dir / "scale_moments.json", io::to_json(sm, seed));
      pm.cov = zt_covariance(grams, sm.mean_L);
      pm.cov_se = kron(zt_schur(grams).cwiseAbs(), sm.se_L);
      pm.samples = sm.samples;
      pm.ess = sm.chain_ess ? sm.chain_ess->minCoeff() : static_cast<double>(sm.samples);
    } else {
      throw InvalidArgument("zero temperature supports depth 1 or 2");
    }
  } else {
    pm = predictive_moments(ds, shape, c.samples, seed, sampling_options(c));
  }

  write_text(dir / "predict.json", io::to_json(pm));
  write_table(dir, "mean", pm.mean, c);
  write_table(dir, "cov", pm.cov, c);
  write_table(dir, "mean_se", pm.mean_se, c);
  write_table(dir, "cov_se", pm.cov_se, c);
  out << "predict: depth " << shape.depth() << ", beta " << (shape.zero_temperature() ? "inf" : io::format_double(shape.beta))
      << ", ess " << short_number(pm.ess) << "\n";
  return kOk;
}

namespace {

void run_sweep(const RunConfig& c, const Dataset& ds, const NetworkShape& base, const fs::path& dir, std::ostream& out) {
  if (base.depth() != 2) throw InvalidArgument("sweep_n1 needs depth 2");
  if (base.zero_temperature()) throw InvalidArgument("sweep_n1 needs finite beta");
  const GramSet grams = build_gram_set(ds);
  const std::uint64_t seed = run_seed(c);
  std::vector<int> n1s = c.sweep_n1;
  std::sort(n1s.begin(), n1s.end());
  n1s.erase(std::unique(n1s.begin(), n1s.end()), n1s.end());

  Matrix table(static_cast<Eigen::Index>(n1s.size()), 5);
  std::vector<double> lx, ly_corr, ly_rel;
  for (std::size_t i = 0; i < n1s.size(); ++i) {
    NetworkShape shape = base;
    shape.widths[1] = n1s[i];
    shape.validate_against(ds);
    const KernelEstimate mc = mean_kernel(ds, shape, c.samples, seed, sampling_options(c));
    const double gamma = static_cast<double>(ds.nd()) / n1s[i];
    const Matrix wide = kernel_wide(grams, gamma, base.beta);
    const double corr_mc = (mc.K - grams.Gxx).norm();
    const double corr_wide = (wide - grams.Gxx).norm();
    const double rel = (mc.K - wide).norm() / corr_wide;
    const auto r = static_cast<Eigen::Index>(i);
    table(r, 0) = n1s[i];
    table(r, 1) = corr_mc;
    table(r, 2) = corr_wide;
    table(r, 3) = rel;
    table(r, 4) = mc.se.norm();
    lx.push_back(std::log(static_cast<double>(n1s[i])));
    ly_corr.push_back(std::log(corr_mc));
    ly_rel.push_back(std::log(rel));
  }
  auto slope = [&](const std::vector<double>& ly) {
    if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= lx.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
  };

  {
    std::ofstream csv(dir / "convergence.csv", std::ios::binary);
    if (!csv) throw InvalidArgument("cannot write convergence.csv");
    csv << "n1,mc_correction,wide_correction,relative_error,mc_se\n";
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
      csv << n1s[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 1; k < table.cols(); ++k) csv << ',' << io::format_double(table(i, k));
      csv << '\n';
    }
  }
  io::JsonObject w;
  w.matrix("table", table);
  w.raw("columns", "[\"n1\", \"mc_correction\", \"wide_correction\", \"relative_error\", \"mc_se\"]");
  w.number("beta", base.beta);
  w.unsigned_integer("seed", seed);
  w.integer("samples", c.samples);
  w.number("correction_slope", slope(ly_corr));
  w.number("relative_error_slope", slope(ly_rel));
  write_text(dir / "convergence.json", w.finish());

  out << "n1        mc_correction  wide_correction  relative_error\n";
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    char line[128];
    std::snprintf(line, sizeof line, "%-9d %-14.6g %-16.6g %.6g\n", n1s[static_cast<std::size_t>(i)], table(i, 1),
                  table(i, 2), table(i, 3));
    out << line;
  }
  out << "correction slope " << short_number(slope(ly_corr)) << ", relative error slope "
      << short_number(slope(ly_rel)) << "\n";
}

}  // namespace

int cmd_kernel(const RunConfig& c, std::ostream& out, std::ostream& err) {
  validate(c);
  const std::uint64_t seed = run_seed(c);
  const Dataset ds = load_dataset(c);
  const Regime regime = parse_regime(c.regime);
  const fs::path dir = prepare_out_dir(c);
  warn_huge_beta(c.beta, err);

  auto shape = [&] { return resolve_shape(c, ds, c.beta); };
  auto gamma_or_default = [&] {
    return c.gamma ? *c.gamma : static_cast<double>(ds.nd()) / hidden_width_of(shape());
  };

  KernelEstimate est;
  est.regime = regime;
  est.ess = kInf;
  switch (regime) {
    case Regime::monte_carlo: {
      const NetworkShape s = shape();
      if (!c.sweep_n1.empty()) {
        run_sweep(c, ds, s, dir, out);
        return kOk;
      }
      if (s.zero_temperature()) throw InvalidArgument("monte_carlo needs finite beta; use --regime zero_temp");
      est = mean_kernel(ds, s, c.samples, seed, sampling_options(c));
      break;
    }
    case Regime::zero_temp: {
      NetworkShape s = shape();
      s.beta = kInfiniteBeta;
      const ScaleMoments sm = zt_scale_moments(ds, s, c.samples, seed, sampling_options(c));
      write_text(dir / "scale_moments.json", io::to_json(sm, seed));
      est = zt_mean_kernel(ds, s, sm);
      est.ess = sm.chain_ess ? sm.chain_ess->minCoeff() : static_cast<double>(sm.samples);
      break;
    }
    case Regime::wide: {
      const GramSet g = build_gram_set(ds);
      est.K = kernel_wide(g, gamma_or_default(), c.beta);
      break;
    }
    case Regime::large_p: {
      const GramSet g = build_gram_set(ds);
      est.K = kernel_large_p(g, ds.Y, hidden_width_of(shape()));
      break;
    }
    case Regime::li_sompolinsky: {
      const GramSet g = build_gram_set(ds);
      const double alpha = c.alpha ? *c.alpha : static_cast<double>(ds.p()) / hidden_width_of(shape());
      const double gamma = gamma_or_default();
      est.K = kernel_li_sompolinsky(g, alpha, gamma);
      const Matrix kgk = est.K * Eigen::LLT<Matrix>(g.Gxx).solve(est.K);
      est.residual = (kgk - (1.0 + alpha) * est.K + alpha * g.Gxx - gamma * g.Gyy).norm();
      break;
    }
    case Regime::aitchison: {
      const GramSet g = build_gram_set(ds);
      const AitchisonSolution sol = kernel_aitchison(g, gamma_or_default());
      est.K = sol.K;
      est.residual = sol.residual;
      break;
    }
  }
  if (est.se.size() == 0) est.se = Matrix::Zero(est.K.rows(), est.K.cols());

  write_text(dir / "kernel.json", io::to_json(est, seed));
  write_table(dir, "K", est.K, c);
  out << "kernel: regime " << to_string(regime);
  if (est.residual) out << ", residual " << short_number(*est.residual);
  out << "\n";
  return kOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err) {
  validate(c);
  const std::uint64_t seed = run_seed(c);
  const Dataset ds = load_dataset(c);
  if (ds.p() > 8 || ds.nd() > 4) throw InvalidArgument("verify is limited to p <= 8 and nd <= 4");
  const NetworkShape shape = resolve_shape(c, ds, c.beta);
  const double oracle_beta = c.oracle_beta.value_or(c.beta);
  if (!std::isfinite(shape.beta) || !std::isfinite(oracle_beta)) throw InvalidArgument("verify needs finite beta");
  warn_huge_beta(shape.beta, err);
  NetworkShape oracle_shape = shape;
  oracle_shape.beta = oracle_beta;
  const fs::path dir = prepare_out_dir(c);
  const SamplingOptions opts = sampling_options(c);

  std::vector<Arm> arms;
  {
    Arm a{"mixture", predictive_moments(ds, shape, c.samples, seed, opts), std::nullopt};
    if (shape.depth() >= 2) a.kernel = mean_kernel(ds, shape, c.samples, seed, opts);
    arms.push_back(std::move(a));
  }
  {
    const auto states = oracle::gibbs_posterior(ds, oracle_shape, c.sweeps, c.burn_in, derive_seed(seed, 0x67696262));
    const oracle::EmpiricalMoments em = oracle::empirical_moments(states, ds);
    if (!em.se_defined) throw EstimatorDiagnostic("verify: the Gibbs chain is too short or does not move");
    Arm a{"gibbs", em.predictive, std::nullopt};
    if (shape.depth() >= 2) a.kernel = em.kernel;
    arms.push_back(std::move(a));
  }
  if (shape.depth() == 1) {
    arms.push_back({"closed_form", closed_form_gp(ds, oracle_beta), std::nullopt});
  } else if (shape.depth() == 2 && ds.nd() == 1) {
    arms.push_back({"quadrature", oracle::quadrature_scalar(ds, oracle_shape),
                    oracle::quadrature_scalar_kernel(ds, oracle_shape)});
  }

  std::vector<Comparison> rows;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    for (std::size_t j = i + 1; j < arms.size(); ++j) compare_arms(arms[i], arms[j], rows);
  }
  bool passed = true;
  double max_z = 0.0;
  for (const auto& r : rows) {
    passed = passed && r.pass;
    max_z = std::max(max_z, std::abs(r.z));
  }

  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-12s %-10s %14s %14s %12s %9s  %s\n", "arm_a", "arm_b", "quantity", "a", "b",
                "se", "z", "status");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-12s %-12s %-10s %14.6g %14.6g %12.4g %9.3f  %s\n", r.arm_a.c_str(),
                  r.arm_b.c_str(), r.quantity.c_str(), r.a, r.b, r.se, r.z, r.pass ? "pass" : "FAIL");
    out << line;
  }
  out << (passed ? "verify: all " : "verify: FAILED, ") << rows.size() << " comparisons, max |z| "
      << short_number(max_z) << "\n";

  std::string list = "[";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    list += i == 0 ? "\n    " : ",\n    ";
    list += "{\"arm_a\": " + io::json_string(r.arm_a) + ", \"arm_b\": " + io::json_string(r.arm_b) +
            ", \"quantity\": " + io::json_string(r.quantity) + ", \"a\": " + io::json_number(r.a) +
            ", \"b\": " + io::json_number(r.b) + ", \"se\": " + io::json_number(r.se) +
            ", \"z\": " + (std::isfinite(r.z) ? io::json_number(r.z) : io::json_string(r.z > 0 ? "inf" : "-inf")) +
            ", \"pass\": " + (r.pass ? "true" : "false") + "}";
  }
  list += rows.empty() ? "]" : "\n  ]";
  io::JsonObject w;
  w.raw("passed", passed ? "true" : "false");
  w.number("max_abs_z", max_z);
  w.number("beta", shape.beta);
  w.number("oracle_beta", oracle_beta);
  w.integer("samples", c.samples);
  w.integer("sweeps", c.sweeps);
  w.unsigned_integer("seed", seed);
  w.raw("comparisons", list);
  write_text(dir / "verify.json", w.finish());

  if (!passed) throw VerificationFailure("verify: at least one comparison exceeded 3 standard errors");
  return kOk;
}

int cmd_gen_data(const RunConfig& c, std::ostream& out, std::ostream&) {
  validate(c);
  const GeneratorSpec spec = c.generate.value_or(GeneratorSpec{});
  const std::uint64_t seed = spec.seed.value_or(run_seed(c));
  const Dataset ds = generate_dataset(spec, seed);
  const fs::path dir = prepare_out_dir(c);
  write_table(dir, "X", ds.X, c);
  write_table(dir, "Y", ds.Y, c);
  write_table(dir, "Xhat", ds.Xhat, c);
  write_table(dir, "Yhat", *ds.Yhat, c);

  const GramSet g = build_gram_set(ds);
  io::JsonObject w;
  w.string("mode", spec.mode);
  w.integer("p", spec.p);
  w.integer("p_hat", spec.p_hat);
  w.integer("n0", spec.n0);
  w.integer("nd", spec.nd);
  w.number("noise", spec.mode == "noisy" ? spec.noise : 0.0);
  w.unsigned_integer("seed", seed);
  w.string("format", c.format);
  w.raw("files", "[\"X." + c.format + "\", \"Y." + c.format + "\", \"Xhat." + c.format + "\", \"Yhat." + c.format + "\"]");
  w.number("interpolation_residual", interpolation_residual(ds));
  w.number("gram_condition_number", condition_number(g.Gxx));
  write_text(dir / "manifest.json", w.finish());
  out << "gen-data: " << spec.mode << " p=" << spec.p << " p_hat=" << spec.p_hat << " n0=" << spec.n0
      << " nd=" << spec.nd << "\n";
  return kOk;
}

// ---------------------------------------------------------------- entry point

namespace {

struct Flags {
  std::string config, x, y, xhat, yhat, widths, beta, regime, sweep_n1, oracle_beta, out_dir, format, mode;
  int depth = 0, hidden_width = 0, workers = 0, p = 0, p_hat = 0, n0 = 0, nd = 0;
  std::int64_t samples = 0, sweeps = 0, burn_in = 0;
  std::uint64_t seed = 0, data_seed = 0;
  double alpha = 0, gamma = 0, ess_floor = 0, noise = 0;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file; flags override its values");
  sub->add_option("--x", f.x, "training inputs X (p x n0), .csv or .json");
  sub->add_option("--y", f.y, "training targets Y (p x nd)");
  sub->add_option("--xhat", f.xhat, "test inputs (defaults to X)");
  sub->add_option("--yhat", f.yhat, "test targets (optional)");
  sub->add_option("--depth", f.depth, "number of weight layers d");
  sub->add_option("--widths", f.widths, "comma-separated widths n0,...,nd");
  sub->add_option("--hidden-width", f.hidden_width, "hidden width used with --depth");
  sub->add_option("--beta", f.beta, "inverse temperature, or inf");
  sub->add_option("--samples", f.samples, "Monte Carlo samples");
  sub->add_option("--seed", f.seed, "random seed (required)");
  sub->add_option("--sweeps", f.sweeps, "Gibbs sweeps (verify)");
  sub->add_option("--burn-in", f.burn_in, "Gibbs burn-in sweeps; negative means 10%");
  sub->add_option("--ess-floor", f.ess_floor, "minimum effective sample size");
  sub->add_option("--regime", f.regime, "monte_carlo, zero_temp, wide, large_p, li_sompolinsky, aitchison");
  sub->add_option("--alpha", f.alpha, "ratio p/n1");
  sub->add_option("--gamma", f.gamma, "ratio nd/n1");
  sub->add_option("--sweep-n1", f.sweep_n1, "comma-separated hidden widths for a convergence table");
  sub->add_option("--oracle-beta", f.oracle_beta, "beta for the oracle arms of verify");
  sub->add_option("--out-dir", f.out_dir, "output directory");
  sub->add_option("--format", f.format, "table format: json or csv");
  sub->add_option("--workers", f.workers, "worker threads (LBNN_WORKERS overrides)");
  sub->add_option("--mode", f.mode, "generator mode: teacher, orthogonal, noisy");
  sub->add_option("--p", f.p, "generator: training points");
  sub->add_option("--p-hat", f.p_hat, "generator: test points");
  sub->add_option("--n0", f.n0, "generator: input dimension");
  sub->add_option("--nd", f.nd, "generator: output dimension");
  sub->add_option("--noise", f.noise, "generator: target noise (noisy mode)");
  sub->add_option("--data-seed", f.data_seed, "generator seed (defaults to --seed)");
}

RunConfig build_config(const CLI::App& sub, const Flags& f) {
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  RunConfig c;
  if (given("--config")) {
    std::ifstream in(f.config);
    if (!in) throw InvalidArgument("cannot open config " + f.config);
    std::stringstream ss;
    ss << in.rdbuf();
    c = config_from_text(ss.str());
    // Data paths in a config file are relative to the file.
    const fs::path base = fs::path(f.config).parent_path();
    for (auto* path : {&c.x, &c.y, &c.xhat, &c.yhat}) {
      if (*path && fs::path(**path).is_relative()) **path = (base / **path).string();
    }
  }
  c.command = sub.get_name();
  if (given("--x")) c.x = f.x;
  if (given("--y")) c.y = f.y;
  if (given("--xhat")) c.xhat = f.xhat;
  if (given("--yhat")) c.yhat = f.yhat;
  if (given("--depth")) c.depth = f.depth;
  if (given("--widths")) c.widths = parse_int_list(f.widths, "--widths");
  if (given("--hidden-width")) c.hidden_width = f.hidden_width;
  if (given("--beta")) c.beta = parse_beta(f.beta);
  if (given("--samples")) c.samples = f.samples;
  if (given("--seed")) c.seed = f.seed;
  if (given("--sweeps")) c.sweeps = f.sweeps;
  if (given("--burn-in")) c.burn_in = f.burn_in;
  if (given("--ess-floor")) c.ess_floor = f.ess_floor;
  if (given("--regime")) c.regime = f.regime;
  if (given("--alpha")) c.alpha = f.alpha;
  if (given("--gamma")) c.gamma = f.gamma;
  if (given("--sweep-n1")) c.sweep_n1 = parse_int_list(f.sweep_n1, "--sweep-n1");
  if (given("--oracle-beta")) c.oracle_beta = parse_beta(f.oracle_beta);
  if (given("--out-dir")) c.out_dir = f.out_dir;
  if (given("--format")) c.format = f.format;
  if (given("--workers")) c.workers = f.workers;

  const bool gen_flag = given("--mode") || given("--p") || given("--p-hat") || given("--n0") || given("--nd") ||
                        given("--noise") || given("--data-seed");
  if (gen_flag) {
    GeneratorSpec g = c.generate.value_or(GeneratorSpec{});
    if (given("--mode")) g.mode = f.mode;
    if (given("--p")) g.p = f.p;
    if (given("--p-hat")) g.p_hat = f.p_hat;
    if (given("--n0")) g.n0 = f.n0;
    if (given("--nd")) g.nd = f.nd;
    if (given("--noise")) g.noise = f.noise;
    if (given("--data-seed")) g.seed = f.data_seed;
    c.generate = g;
  }
  return c;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Posterior predictive and feature-kernel statistics for deep linear Bayesian networks"};
  app.name("lbnn");
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"predict", "posterior predictive mean and covariance"},
      {"kernel", "first-layer feature kernel in a chosen regime"},
      {"verify", "cross-check the scale mixture against the weight-space oracles"},
      {"gen-data", "generate a synthetic dataset"}};
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const RunConfig config = build_config(*sub, flags);
    if (config.command == "predict") return cmd_predict(config, out, err);
    if (config.command == "kernel") return cmd_kernel(config, out, err);
    if (config.command == "verify") return cmd_verify(config, out, err);
    return cmd_gen_data(config, out, err);
  } catch (const VerificationFailure& e) {
    err << "error: " << e.what() << "\n";
    return kVerificationFailure;
  } catch (const EstimatorDiagnostic& e) {
    err << "error: " << e.what() << "\n";
    return kEstimatorDiagnostic;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kEstimatorDiagnostic;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace lbnn::cli
