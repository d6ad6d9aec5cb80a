#include "lbnn/oracle.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "lbnn/error.hpp"
#include "lbnn/quadrature.hpp"

namespace lbnn::oracle {
namespace {

constexpr std::uint64_t kPriorImportanceSalt = 0x6f7261636c652d70ULL;
constexpr Eigen::Index kBatches = 50;

void require_finite_beta(const NetworkShape& shape, const char* what) {
  if (!std::isfinite(shape.beta)) throw InvalidArgument(std::string(what) + ": beta must be finite");
}

Matrix draw_gaussian(Eigen::Index rows, Eigen::Index cols, double variance, Stream& stream) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = normal(stream);
  return w;
}

WeightState draw_prior(const NetworkShape& shape, Stream& stream) {
  WeightState s;
  for (int l = 1; l <= shape.depth(); ++l)
    s.W.push_back(draw_gaussian(shape.width(l), shape.width(l - 1), 1.0 / shape.width(l - 1), stream));
  return s;
}

// X W₁ᵀ ⋯ W_dᵀ
Matrix forward(const Matrix& X, const WeightState& s) {
  Matrix f = X;
  for (const auto& w : s.W) f = f * w.transpose();
  return f;
}

void check_state(const WeightState& s, const NetworkShape& shape) {
  if (static_cast<int>(s.W.size()) != shape.depth()) throw InvalidArgument("weight state: wrong number of layers");
  for (int l = 1; l <= shape.depth(); ++l) {
    const Matrix& w = s.W[static_cast<std::size_t>(l - 1)];
    if (w.rows() != shape.width(l) || w.cols() != shape.width(l - 1))
      throw InvalidArgument("weight state: layer " + std::to_string(l) + " has the wrong shape");
  }
}

struct ScalarSetup {
  Matrix G;
  Matrix Gxh;
  Matrix Ghh;
  Vector y;
  double beta;
  int n1;
};

ScalarSetup scalar_setup(const Dataset& ds, const NetworkShape& shape) {
  ds.validate();
  shape.validate_against(ds);
  require_finite_beta(shape, "quadrature");
  if (shape.depth() != 2 || shape.nd() != 1)
    throw InvalidArgument("quadrature: needs a two-layer network with scalar output");
  const double n0 = static_cast<double>(ds.n0());
  ScalarSetup s;
  s.G = ds.X * ds.X.transpose() / n0;
  s.G = 0.5 * (s.G + s.G.transpose()).eval();
  s.Gxh = ds.X * ds.Xhat.transpose() / n0;
  s.Ghh = ds.Xhat * ds.Xhat.transpose() / n0;
  s.Ghh = 0.5 * (s.Ghh + s.Ghh.transpose()).eval();
  s.y = ds.Y.col(0);
  s.beta = shape.beta;
  s.n1 = shape.width(1);
  return s;
}

// log Gamma(n₁/2, scale 2/n₁) density plus the marginal-likelihood weight at λ.
double scalar_log_density(const ScalarSetup& s, double lambda) {
  const double k = 0.5 * s.n1;
  const double theta = 2.0 / s.n1;
  const double log_prior = (k - 1.0) * std::log(lambda) - lambda / theta - std::lgamma(k) - k * std::log(theta);
  const Eigen::Index p = s.G.rows();
  const Matrix gamma = Matrix::Identity(p, p) + s.beta * lambda * s.G;
  const Eigen::LLT<Matrix> llt(gamma);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return log_prior - 0.5 * log_det - 0.5 * s.beta * s.y.dot(llt.solve(s.y));
}

HalfLineExpectation scalar_posterior(const ScalarSetup& s) {
  return HalfLineExpectation([&s](double lambda) { return scalar_log_density(s, lambda); });
}

Matrix batch_se(const std::vector<Matrix>& xs, bool* defined) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  const Matrix nan = Matrix::Constant(xs.front().rows(), xs.front().cols(), std::numeric_limits<double>::quiet_NaN());
  if (n < 2 * kBatches) {
    *defined = false;
    return nan;
  }
  const Eigen::Index per = n / kBatches;
  std::vector<Matrix> means;
  Matrix grand = Matrix::Zero(xs.front().rows(), xs.front().cols());
  for (Eigen::Index b = 0; b < kBatches; ++b) {
    Matrix m = Matrix::Zero(grand.rows(), grand.cols());
    for (Eigen::Index i = b * per; i < (b + 1) * per; ++i) m += xs[static_cast<std::size_t>(i)];
    m /= static_cast<double>(per);
    grand += m / static_cast<double>(kBatches);
    means.push_back(std::move(m));
  }
  Matrix var = Matrix::Zero(grand.rows(), grand.cols());
  for (const auto& m : means) var += (m - grand).array().square().matrix();
  var /= static_cast<double>(kBatches - 1);
  return (var / static_cast<double>(kBatches)).array().sqrt().matrix();
}

}  // namespace

GibbsSampler::GibbsSampler(const Dataset& ds, const NetworkShape& shape, std::uint64_t seed)
    : ds_(ds), shape_(shape), stream_(seed) {
  ds_.validate();
  shape_.validate_against(ds_);
  require_finite_beta(shape_, "gibbs");
  state_ = draw_prior(shape_, stream_);
}

GibbsSampler::Conditional GibbsSampler::conditional(int layer) const {
  const int d = shape_.depth();
  if (layer < 1 || layer > d) throw InvalidArgument("gibbs: layer out of range");
  Matrix P = ds_.X;
  for (int l = 1; l < layer; ++l) P = P * state_.W[static_cast<std::size_t>(l - 1)].transpose();
  Matrix Q = Matrix::Identity(shape_.nd(), shape_.nd());
  for (int l = d; l > layer; --l) Q = Q * state_.W[static_cast<std::size_t>(l - 1)];
  const Eigen::Index rows = P.cols();
  const Eigen::Index cols = Q.cols();
  const Matrix ptp = P.transpose() * P;
  const Matrix qtq = Q.transpose() * Q;
  Conditional c;
  c.precision = shape_.beta * kron(ptp, qtq);
  c.precision.diagonal().array() += static_cast<double>(shape_.width(layer - 1));
  const Matrix rhs = shape_.beta * P.transpose() * ds_.Y * Q;
  c.mean = c.precision.llt().solve(vec_rows(rhs));
  if (c.mean.size() != rows * cols) throw NumericalError("gibbs: conditional dimension mismatch");
  return c;
}

void GibbsSampler::update_layer(int layer) {
  const Conditional c = conditional(layer);
  const Eigen::LLT<Matrix> llt(c.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("gibbs: conditional precision is not positive definite");
  std::normal_distribution<double> normal;
  Vector z(c.mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(stream_);
  const Vector x = c.mean + llt.matrixU().solve(z);
  Matrix& w = state_.W[static_cast<std::size_t>(layer - 1)];
  w = unvec_rows(x, w.cols(), w.rows()).transpose();
}

void GibbsSampler::sweep() {
  for (int l = 1; l <= shape_.depth(); ++l) update_layer(l);
}

void GibbsSampler::set_state(WeightState state) {
  check_state(state, shape_);
  state_ = std::move(state);
}

double GibbsSampler::log_posterior() const {
  double lp = -0.5 * shape_.beta * (forward(ds_.X, state_) - ds_.Y).squaredNorm();
  for (int l = 1; l <= shape_.depth(); ++l)
    lp -= 0.5 * shape_.width(l - 1) * state_.W[static_cast<std::size_t>(l - 1)].squaredNorm();
  return lp;
}

std::vector<WeightState> gibbs_posterior(const Dataset& ds, const NetworkShape& shape, std::int64_t sweeps,
                                         std::int64_t burn_in, std::uint64_t seed) {
  if (sweeps < 1) throw InvalidArgument("gibbs: sweeps must be positive");
  if (burn_in < 0) burn_in = sweeps / 10;
  GibbsSampler sampler(ds, shape, seed);
  for (std::int64_t i = 0; i < burn_in; ++i) sampler.sweep();
  std::vector<WeightState> out;
  out.reserve(static_cast<std::size_t>(sweeps));
  for (std::int64_t i = 0; i < sweeps; ++i) {
    sampler.sweep();
    out.push_back(sampler.state());
  }
  return out;
}

PredictiveMoments prior_importance(const Dataset& ds, const NetworkShape& shape, std::int64_t num_samples,
                                   std::uint64_t seed, const SamplingOptions& options) {
  ds.validate();
  shape.validate_against(ds);
  require_finite_beta(shape, "prior importance");
  if (num_samples < 1) throw InvalidArgument("prior importance: samples must be positive");
  const Eigen::Index q = ds.p_hat() * ds.nd();
  const std::uint64_t base = derive_seed(seed, kPriorImportanceSalt);
  const DrawFunction draw = [&](std::int64_t i) {
    Stream stream(base, static_cast<std::uint64_t>(i));
    const WeightState s = draw_prior(shape, stream);
    const double log_w = -0.5 * shape.beta * (forward(ds.X, s) - ds.Y).squaredNorm();
    return WeightedDraw{log_w, vec_rows(forward(ds.Xhat, s))};
  };
  const auto blocks = accumulate_blocks(num_samples, q, q, draw, options);
  const WeightedSums all = merge_all(blocks);
  PredictiveMoments out;
  out.samples = num_samples;
  out.seed = seed;
  out.ess = all.ess();
  if (out.ess < options.ess_floor)
    throw EstimatorDiagnostic("prior importance: effective sample size " + std::to_string(out.ess) +
                              " is below the floor");
  const auto functional = [q](const WeightedSums& w) {
    const Vector m = w.mean();
    const Matrix cov = w.outer_mean() - m * m.transpose();
    Vector v(q + q * q);
    v << m, cov.reshaped();
    return v;
  };
  const JackknifeResult jk = jackknife(blocks, functional);
  out.mean = unvec_rows(jk.estimate.head(q), ds.p_hat(), ds.nd());
  out.cov = symmetrize(jk.estimate.tail(q * q).reshaped(q, q));
  out.mean_se = unvec_rows(jk.standard_error.head(q), ds.p_hat(), ds.nd());
  out.cov_se = jk.standard_error.tail(q * q).reshaped(q, q);
  return out;
}

PredictiveMoments quadrature_scalar(const Dataset& ds, const NetworkShape& shape) {
  const ScalarSetup s = scalar_setup(ds, shape);
  const HalfLineExpectation post = scalar_posterior(s);
  const Eigen::Index p = s.G.rows();
  const Eigen::Index ph = s.Ghh.rows();
  const auto integrand = [&](double lambda) {
    const Matrix gamma = Matrix::Identity(p, p) + s.beta * lambda * s.G;
    const Eigen::LLT<Matrix> llt(gamma);
    const Vector mu = s.beta * lambda * s.Gxh.transpose() * llt.solve(s.y);
    const Matrix sigma = lambda * s.Ghh - s.beta * lambda * lambda * s.Gxh.transpose() * llt.solve(s.Gxh);
    const Matrix second = sigma + mu * mu.transpose();
    Vector v(ph + ph * ph);
    v << mu, second.reshaped();
    return v;
  };
  const Vector e = post.expect(integrand, ph + ph * ph);
  PredictiveMoments out;
  out.mean = e.head(ph);
  const Vector m = e.head(ph);
  out.cov = symmetrize(e.tail(ph * ph).reshaped(ph, ph) - m * m.transpose());
  out.mean_se = Matrix::Zero(ph, 1);
  out.cov_se = Matrix::Zero(ph, ph);
  out.ess = std::numeric_limits<double>::infinity();
  return out;
}

KernelEstimate quadrature_scalar_kernel(const Dataset& ds, const NetworkShape& shape) {
  const ScalarSetup s = scalar_setup(ds, shape);
  const HalfLineExpectation post = scalar_posterior(s);
  const Eigen::Index p = s.G.rows();
  // Posterior of the hidden features along the readout direction, given λ = ‖W₂‖².
  const auto integrand = [&](double lambda) {
    const Matrix gamma = Matrix::Identity(p, p) + s.beta * lambda * s.G;
    const Eigen::LLT<Matrix> llt(gamma);
    const Vector a = s.G * llt.solve(s.y);
    const Matrix b = s.G * llt.solve(s.G);
    const Matrix extra = s.beta * s.beta * lambda * a * a.transpose() - s.beta * lambda * b;
    return Vector(extra.reshaped());
  };
  const Vector e = post.expect(integrand, p * p);
  KernelEstimate out;
  out.K = symmetrize(s.G + e.reshaped(p, p) / static_cast<double>(s.n1));
  out.se = Matrix::Zero(p, p);
  out.ess = std::numeric_limits<double>::infinity();
  out.regime = Regime::monte_carlo;
  return out;
}

EmpiricalMoments empirical_moments(const std::vector<WeightState>& states, const Dataset& ds) {
  if (states.empty()) throw InvalidArgument("empirical moments: empty chain");
  ds.validate();
  const auto n = static_cast<double>(states.size());
  const double n1 = static_cast<double>(states.front().W.front().rows());
  const Eigen::Index q = ds.p_hat() * ds.nd();
  const Eigen::Index p = ds.p();

  std::vector<Matrix> fs;
  std::vector<Matrix> ks;
  fs.reserve(states.size());
  ks.reserve(states.size());
  // Outputs are stored relative to the first state so a constant chain has exactly zero spread.
  const Vector origin = vec_rows(forward(ds.Xhat, states.front()));
  Vector mean = Vector::Zero(q);
  Matrix kmean = Matrix::Zero(p, p);
  for (const auto& s : states) {
    if (s.W.empty() || s.W.front().cols() != ds.n0()) throw InvalidArgument("empirical moments: state shape mismatch");
    fs.push_back(vec_rows(forward(ds.Xhat, s)) - origin);
    const Matrix h = ds.X * s.W.front().transpose();
    ks.push_back(h * h.transpose() / n1);
    mean += fs.back();
    kmean += ks.back();
  }
  mean /= n;
  kmean /= n;
  Matrix cov = Matrix::Zero(q, q);
  for (const auto& f : fs) cov += (f - mean) * (f - mean).transpose();
  cov /= n > 1 ? n - 1 : 1.0;

  EmpiricalMoments out;
  out.predictive.mean = unvec_rows(origin + mean, ds.p_hat(), ds.nd());
  out.predictive.cov = symmetrize(cov);
  out.predictive.samples = static_cast<std::int64_t>(states.size());
  out.predictive.ess = n;
  out.kernel.K = symmetrize(kmean);
  out.kernel.ess = n;

  bool defined = states.size() >= static_cast<std::size_t>(2 * kBatches) && cov.diagonal().maxCoeff() > 0.0;
  const Matrix nan_q = Matrix::Constant(q, q, std::numeric_limits<double>::quiet_NaN());
  if (defined) {
    std::vector<Matrix> fm;
    for (const auto& f : fs) fm.emplace_back(f);
    out.predictive.mean_se = unvec_rows(batch_se(fm, &defined).col(0), ds.p_hat(), ds.nd());
    // Per-batch sample covariances.
    const auto per = static_cast<Eigen::Index>(fs.size()) / kBatches;
    std::vector<Matrix> covs;
    for (Eigen::Index b = 0; b < kBatches; ++b) {
      Vector bm = Vector::Zero(q);
      for (Eigen::Index i = b * per; i < (b + 1) * per; ++i) bm += fs[static_cast<std::size_t>(i)];
      bm /= static_cast<double>(per);
      Matrix c = Matrix::Zero(q, q);
      for (Eigen::Index i = b * per; i < (b + 1) * per; ++i) {
        const Vector& f = fs[static_cast<std::size_t>(i)];
        c += (f - bm) * (f - bm).transpose();
      }
      covs.push_back(c / static_cast<double>(per > 1 ? per - 1 : 1));
    }
    Matrix cm = Matrix::Zero(q, q);
    for (const auto& c : covs) cm += c / static_cast<double>(kBatches);
    Matrix var = Matrix::Zero(q, q);
    for (const auto& c : covs) var += (c - cm).array().square().matrix();
    out.predictive.cov_se = (var / static_cast<double>(kBatches * (kBatches - 1))).array().sqrt().matrix();
    out.kernel.se = batch_se(ks, &defined);
  }
  if (!defined) {
    out.predictive.mean_se = Matrix::Constant(ds.p_hat(), ds.nd(), std::numeric_limits<double>::quiet_NaN());
    out.predictive.cov_se = nan_q;
    out.kernel.se = Matrix::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  }
  out.se_defined = defined;
  return out;
}

void write_chain_dump(const std::filesystem::path& prefix, const std::vector<WeightState>& states,
                      const NetworkShape& shape, std::uint64_t seed) {
  shape.validate();
  require_finite_beta(shape, "chain dump");
  for (const auto& s : states) check_state(s, shape);
  std::filesystem::path bin = prefix;
  bin += ".bin";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + bin.string() + " for writing");
  for (const auto& s : states)
    for (const auto& w : s.W) {
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = w;
      out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    }
  if (!out) throw NumericalError("failed writing " + bin.string());

  nlohmann::json meta;
  meta["format"] = "float64-le-row-major";
  meta["widths"] = shape.widths;
  meta["beta"] = shape.beta;
  meta["seed"] = seed;
  meta["num_states"] = states.size();
  nlohmann::json shapes = nlohmann::json::array();
  for (int l = 1; l <= shape.depth(); ++l) shapes.push_back({shape.width(l), shape.width(l - 1)});
  meta["shapes"] = shapes;
  std::filesystem::path side = prefix;
  side += ".json";
  std::ofstream js(side);
  if (!js) throw InvalidArgument("cannot open " + side.string() + " for writing");
  js << meta.dump(2) << '\n';
}

std::vector<WeightState> read_chain_dump(const std::filesystem::path& prefix, ChainDumpInfo* info) {
  std::filesystem::path side = prefix;
  side += ".json";
  std::ifstream js(side);
  if (!js) throw InvalidArgument("cannot open " + side.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed chain sidecar: " + std::string(e.what()));
  }
  ChainDumpInfo local;
  try {
    local.widths = meta.at("widths").get<std::vector<int>>();
    local.beta = meta.at("beta").get<double>();
    local.seed = meta.at("seed").get<std::uint64_t>();
    local.num_states = meta.at("num_states").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("chain sidecar: " + std::string(e.what()));
  }
  NetworkShape shape{local.widths, local.beta};
  shape.validate();

  std::filesystem::path bin = prefix;
  bin += ".bin";
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + bin.string());
  std::vector<WeightState> states;
  states.reserve(static_cast<std::size_t>(local.num_states));
  for (std::int64_t i = 0; i < local.num_states; ++i) {
    WeightState s;
    for (int l = 1; l <= shape.depth(); ++l) {
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(shape.width(l), shape.width(l - 1));
      in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
      if (!in) throw InvalidArgument("chain dump is truncated");
      s.W.emplace_back(rm);
    }
    states.push_back(std::move(s));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw InvalidArgument("chain dump has trailing data");
  if (info) *info = local;
  return states;
}

}  // namespace lbnn::oracle
