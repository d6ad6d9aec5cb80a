#include "lbnn/scale_prior.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "lbnn/error.hpp"

namespace lbnn {

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double variance, Stream& stream) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = normal(stream);
  }
  return w;
}

void require_scale_shape(const NetworkShape& shape) {
  shape.validate();
  if (shape.depth() < 2) throw InvalidArgument("scale prior needs depth >= 2 (depth 1 has L = I)");
}

}  // namespace

Matrix draw_scale_product(const NetworkShape& shape, Stream& stream) {
  require_scale_shape(shape);
  // M = W_d ⋯ W₂, built right to left; L = M Mᵀ.
  Matrix m = gaussian_matrix(shape.width(2), shape.width(1), 1.0 / shape.width(1), stream);
  for (int l = 3; l <= shape.depth(); ++l) {
    m = gaussian_matrix(shape.width(l), shape.width(l - 1), 1.0 / shape.width(l - 1), stream) * m;
  }
  return symmetrize(m * m.transpose());
}

Matrix draw_wishart(int n1, int n2, Stream& stream) {
  if (n2 < 1) throw InvalidArgument("wishart: dimension must be positive");
  if (n1 < n2) throw InvalidArgument("wishart: n1 < n2 gives a singular scale (bottleneck)");
  std::normal_distribution<double> normal;
  Matrix a = Matrix::Zero(n2, n2);
  for (int i = 0; i < n2; ++i) {
    std::chi_squared_distribution<double> chi2(static_cast<double>(n1 - i));
    a(i, i) = std::sqrt(chi2(stream));
    for (int j = 0; j < i; ++j) a(i, j) = normal(stream);
  }
  return symmetrize(a * a.transpose() / static_cast<double>(n1));
}

Matrix draw_scale(const NetworkShape& shape, Stream& stream) {
  shape.validate();
  if (shape.depth() == 1) return Matrix::Identity(shape.nd(), shape.nd());
  if (shape.width(1) < shape.width(2)) return draw_scale_product(shape, stream);
  Matrix l = draw_wishart(shape.width(1), shape.width(2), stream);
  for (int k = 3; k <= shape.depth(); ++k) {
    const Matrix w = gaussian_matrix(shape.width(k), shape.width(k - 1), 1.0 / shape.width(k - 1), stream);
    l = symmetrize(w * l * w.transpose());
  }
  return l;
}

ScaleSample sample_scale(const NetworkShape& shape, std::uint64_t seed) {
  Stream stream(seed);
  return {draw_scale_product(shape, stream), 0.0};
}

ScaleSample sample_wishart(int n1, int n2, std::uint64_t seed) {
  Stream stream(seed);
  return {draw_wishart(n1, n2, stream), 0.0};
}

double log_scale_density_d2(const Matrix& L, int n1, int n2) {
  if (n1 < n2) throw InvalidArgument("wishart density: n1 < n2");
  if (L.rows() != n2 || L.cols() != n2) throw InvalidArgument("wishart density: L has wrong shape");
  Eigen::LLT<Matrix> llt(symmetrize(L));
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double k = n1;
  const double n = n2;
  double log_multigamma = n * (n - 1.0) / 4.0 * std::log(std::numbers::pi);
  for (int j = 1; j <= n2; ++j) log_multigamma += std::lgamma(k / 2.0 + (1.0 - j) / 2.0);
  // Scale Σ = I/n1: −(k/2) log det Σ = (k n / 2) log n1 and tr(Σ⁻¹L) = n1 tr L.
  return (k - n - 1.0) / 2.0 * log_det - 0.5 * k * L.trace() - k * n / 2.0 * std::log(2.0) +
         k * n / 2.0 * std::log(k) - log_multigamma;
}

}  // namespace lbnn
