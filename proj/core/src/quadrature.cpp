#include "lbnn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lbnn/error.hpp"

namespace lbnn {

namespace {

constexpr double kLogLo = -30.0;  // grid covers [e^-30, e^30]
constexpr double kLogHi = 30.0;
constexpr int kGrid = 6001;
constexpr double kTailDrop = 60.0;  // breakpoints where the log density has dropped this much

}  // namespace

HalfLineExpectation::HalfLineExpectation(std::function<double(double)> log_density, double tolerance)
    : log_density_(std::move(log_density)), tolerance_(tolerance) {
  std::vector<double> grid(kGrid);
  std::vector<double> values(kGrid);
  int best = -1;
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = std::exp(kLogLo + (kLogHi - kLogLo) * i / (kGrid - 1));
    const double v = log_density_(grid[i]) + std::log(grid[i]);  // mass per unit log x
    values[i] = std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    if (best < 0 || values[i] > values[best]) best = i;
  }
  if (best < 0 || !std::isfinite(values[best])) throw NumericalError("density has no finite mass on (0, inf)");
  peak_ = log_density_(grid[best]);
  mode_ = grid[best];
  int lo = best;
  while (lo > 0 && values[lo] > values[best] - kTailDrop) --lo;
  int hi = best;
  while (hi < kGrid - 1 && values[hi] > values[best] - kTailDrop) ++hi;
  // Integration runs in u = log x, where power-law behaviour at 0 and ∞ becomes smooth.
  constexpr int kPieces = 24;
  const double a = std::log(grid[lo]);
  const double b = std::log(grid[hi]);
  for (int k = 0; k <= kPieces; ++k) breaks_.push_back(a + (b - a) * k / kPieces);

  const Vector z = integrate([](double) { return Vector::Ones(1); }, 1);
  if (!(z(0) > 0.0) || !std::isfinite(z(0))) throw NumericalError("density normalizer is not positive and finite");
  log_normalizer_ = peak_ + std::log(z(0));
}

Vector HalfLineExpectation::integrate(const std::function<Vector(double)>& f, Eigen::Index dim) const {
  using boost::math::quadrature::gauss_kronrod;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  Vector total = Vector::Zero(dim);
  auto piece = [&](double lo, double hi) {
    // One pass per component keeps boost's scalar interface.
    for (Eigen::Index c = 0; c < dim; ++c) {
      auto g = [&](double u) {
        const double x = std::exp(u);
        if (!(x > 0.0) || !std::isfinite(x)) return 0.0;
        const double ld = log_density_(x) - peak_ + u;
        if (ld < -700.0 || std::isnan(ld)) return 0.0;
        return f(x)(c) * std::exp(ld);
      };
      double err = 0.0;
      total(c) += gauss_kronrod<double, 61>::integrate(g, lo, hi, 15, tolerance_, &err);
    }
  };
  piece(-kInf, breaks_.front());
  for (std::size_t k = 0; k + 1 < breaks_.size(); ++k) piece(breaks_[k], breaks_[k + 1]);
  piece(breaks_.back(), kInf);
  return total;
}

Vector HalfLineExpectation::expect(const std::function<Vector(double)>& f, Eigen::Index dim) const {
  return integrate(f, dim) / std::exp(log_normalizer_ - peak_);
}

double HalfLineExpectation::expect(const std::function<double(double)>& f) const {
  return expect([&](double x) { return Vector::Constant(1, f(x)); }, 1)(0);
}

}  // namespace lbnn
