#include "lbnn/gig.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "lbnn/error.hpp"

namespace lbnn {

namespace {

// Standardized two-parameter form: density ∝ x^{λ−1} exp(−ω(x + 1/x)/2), λ ≥ 0, ω > 0.

double standard_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms on the unshifted density (Dagpunar; Lehner).
double rou_no_shift(double lambda, double omega, Stream& stream) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = standard_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * stream.uniform();
    const double v = stream.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms with the density shifted by its mode; bounding rectangle from the
// roots of a cubic solved by Cardano's rule.
double rou_mode_shift(double lambda, double omega, Stream& stream) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = standard_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + stream.uniform() * (uplus - uminus);
    const double v = stream.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Hörmann & Leydold (2014): constant hat on [0, x0], power/exponential hats beyond.
// Valid for 0 ≤ λ < 1, 0 < ω ≤ 1.
double log_concave_hat(double lambda, double omega, Stream& stream) {
  const double xm = standard_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  area[0] = k0 * x0;
  double k1 = 0.0;
  double k2 = 0.0;
  if (x0 >= 2.0 / omega) {
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                            : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];

  for (;;) {
    double v = total * stream.uniform();
    double x = 0.0;
    double hx = 0.0;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double lo = std::max(x0, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = stream.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

double draw_gamma(double shape, double scale, Stream& stream) {
  std::gamma_distribution<double> gamma(shape, scale);
  return gamma(stream);
}

}  // namespace

void GigParams::validate() const {
  if (!std::isfinite(nu) || !std::isfinite(chi) || !std::isfinite(psi)) throw InvalidArgument("gig: non-finite parameter");
  if (chi < 0.0 || psi < 0.0) throw InvalidArgument("gig: chi and psi must be >= 0");
  if (chi == 0.0 && psi == 0.0) throw InvalidArgument("gig: chi and psi cannot both be 0");
  if (chi == 0.0 && !(nu > 0.0)) throw InvalidArgument("gig: chi = 0 requires nu > 0");
  if (psi == 0.0 && !(nu < 0.0)) throw InvalidArgument("gig: psi = 0 requires nu < 0");
}

double GigParams::log_density(double x) const {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return (nu - 1.0) * std::log(x) - 0.5 * (chi / x + psi * x);
}

double draw_gig(const GigParams& params, Stream& stream) {
  params.validate();
  const double nu = params.nu;
  if (params.chi == 0.0) return draw_gamma(nu, 2.0 / params.psi, stream);
  if (params.psi == 0.0) return 1.0 / draw_gamma(-nu, 2.0 / params.chi, stream);

  const double lambda = std::abs(nu);
  const double omega = std::sqrt(params.chi * params.psi);
  const double alpha = std::sqrt(params.chi / params.psi);
  double x = 0.0;
  if (lambda > 2.0 || omega > 3.0) {
    x = rou_mode_shift(lambda, omega, stream);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    x = rou_no_shift(lambda, omega, stream);
  } else {
    x = log_concave_hat(lambda, omega, stream);
  }
  // A draw of order |ν| inverted gives order −|ν|.
  return nu < 0.0 ? alpha / x : alpha * x;
}

double sample_gig(double nu, double chi, double psi, std::uint64_t seed) {
  Stream stream(seed);
  return draw_gig({nu, chi, psi}, stream);
}

}  // namespace lbnn
