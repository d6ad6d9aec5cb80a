#include "lbnn/asymptotics.hpp"

#include <cmath>

#include "lbnn/error.hpp"

namespace lbnn {

namespace {

Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

// G · (G⁻¹H)^{1/2}, which is symmetric for G PD and H PSD.
Matrix times_similarity_sqrt(const Matrix& g, const Matrix& h) { return symmetrize(g * similarity_sqrt(g, h)); }

}  // namespace

RegimeRatios RegimeRatios::from_sizes(Eigen::Index p, Eigen::Index nd, int n) {
  if (n < 1) throw InvalidArgument("ratios: width must be positive");
  return {static_cast<double>(p) / n, static_cast<double>(nd) / n};
}

void RegimeRatios::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in [0, 1)");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
}

Matrix kernel_wide(const GramSet& grams, double gamma, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("kernel_wide: beta must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("kernel_wide: gamma must lie in [0, 1]");
  const auto p = grams.p();
  const Matrix gamma_inf = std::isinf(beta) ? grams.Gxx : Matrix(grams.Gxx + identity(p) / beta);
  const Eigen::LLT<Matrix> llt(gamma_inf);
  if (llt.info() != Eigen::Success || condition_number(gamma_inf) > kConditionCap) {
    throw InvalidArgument("kernel_wide: Gamma_inf is singular");
  }
  const Matrix a = llt.solve(grams.Gxx);  // Γ∞⁻¹ G_xx
  return symmetrize(grams.Gxx + gamma * a.transpose() * (grams.Gyy - gamma_inf) * a);
}

Matrix kernel_large_p(const GramSet& grams, const Matrix& Y, int n1) {
  if (Y.rows() != grams.p()) throw InvalidArgument("kernel_large_p: Y rows do not match Gxx");
  if (n1 < 1) throw InvalidArgument("kernel_large_p: n1 must be positive");
  require_positive_definite(grams.Gxx, "Gxx");
  const auto p = static_cast<double>(grams.p());
  const Matrix overlap = symmetrize(Y.transpose() * Eigen::LLT<Matrix>(grams.Gxx).solve(Y)) / p;
  if (!(condition_number(overlap) <= kConditionCap)) {
    throw InvalidArgument("kernel_large_p: Y^T Gxx^-1 Y is rank deficient");
  }
  const double gamma = static_cast<double>(Y.cols()) / n1;
  const Matrix inner = Eigen::LLT<Matrix>(overlap).solve(Y.transpose());
  return symmetrize((1.0 - gamma) * grams.Gxx + Y * inner / static_cast<double>(n1));
}

CareSolution care_li_sompolinsky(const GramSet& grams, const Matrix& Y, int n1, double alpha) {
  if (!(alpha < 1.0 && alpha >= 0.0)) throw InvalidArgument("care: alpha must lie in [0, 1)");
  if (Y.rows() != grams.p()) throw InvalidArgument("care: Y rows do not match Gxx");
  require_positive_definite(grams.Gxx, "Gxx");
  const auto nd = Y.cols();
  const Matrix m = symmetrize(Y.transpose() * Eigen::LLT<Matrix>(grams.Gxx).solve(Y)) / static_cast<double>(n1);
  const double a = 1.0 - alpha;
  CareSolution out;
  out.L = symmetrize(0.5 * (a * identity(nd) + psd_sqrt(a * a * identity(nd) + 4.0 * m)));
  const Eigen::LLT<Matrix> llt(out.L);
  if (llt.info() != Eigen::Success) throw NumericalError("care: solution is not PD");
  const Matrix l_inv = llt.solve(identity(nd));
  out.residual = (identity(nd) - l_inv * m * l_inv - a * l_inv).norm();
  return out;
}

Matrix kernel_li_sompolinsky(const GramSet& grams, double alpha, double gamma) {
  RegimeRatios{alpha, gamma}.validate();
  const double a = 1.0 - alpha;
  // (1−α)² I + 4γ G⁻¹ G_yy = G⁻¹ H with H = (1−α)² G + 4γ G_yy.
  const Matrix h = a * a * grams.Gxx + 4.0 * gamma * grams.Gyy;
  return symmetrize(0.5 * ((1.0 + alpha) * grams.Gxx + times_similarity_sqrt(grams.Gxx, h)));
}

Matrix kernel_li_sompolinsky_leading(const GramSet& grams, double alpha, double gamma) {
  RegimeRatios{alpha, gamma}.validate();
  return (1.0 - gamma) * grams.Gxx + gamma / (1.0 - alpha) * grams.Gyy;
}

AitchisonSolution kernel_aitchison(const GramSet& grams, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("aitchison: gamma must lie in (0, 1]");
  const double a = 1.0 - gamma;
  const Matrix h = a * a * grams.Gxx + 4.0 * gamma * grams.Gyy;
  AitchisonSolution out;
  out.K = symmetrize(0.5 * (a * grams.Gxx + times_similarity_sqrt(grams.Gxx, h)));
  if (!(condition_number(out.K) <= kConditionCap)) throw NumericalError("aitchison: K is singular");
  const Matrix kgk = out.K * Eigen::LLT<Matrix>(grams.Gxx).solve(out.K);
  out.residual = (kgk + (gamma - 1.0) * out.K - gamma * grams.Gyy).norm();
  return out;
}

}  // namespace lbnn
