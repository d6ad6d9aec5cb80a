#include "lbnn/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lbnn/error.hpp"

namespace lbnn {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector vec_rows(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  }
  return v;
}

Matrix unvec_rows(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw InvalidArgument("unvec_rows: size mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  }
  return m;
}

Matrix symmetrize(const Matrix& s) { return 0.5 * (s + s.transpose()); }

double relative_asymmetry(const Matrix& s) {
  const double norm = s.norm();
  if (norm == 0.0) return 0.0;
  return (s - s.transpose()).norm() / norm;
}

SymmetricEigen symmetric_eigen(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double condition_number(const Matrix& s) {
  if (s.size() == 0) return 1.0;
  const Vector values = Eigen::SelfAdjointEigenSolver<Matrix>(s, Eigen::EigenvaluesOnly).eigenvalues();
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

void require_positive_definite(const Matrix& s, const char* what, double cap) {
  if (s.rows() != s.cols()) throw InvalidArgument(std::string(what) + ": matrix is not square");
  if (!s.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entries");
  if (relative_asymmetry(s) > 1e-8) throw InvalidArgument(std::string(what) + ": matrix is not symmetric");
  const double cond = condition_number(s);
  if (!(cond <= cap)) {
    throw InvalidArgument(std::string(what) + ": not positive definite within condition cap (cond = " +
                          std::to_string(cond) + ")");
  }
}

Matrix clamp_psd(const Matrix& s, double tolerance) {
  const auto [values, vectors] = symmetric_eigen(symmetrize(s));
  Vector clamped = values;
  for (Eigen::Index i = 0; i < clamped.size(); ++i) {
    if (clamped(i) < -tolerance) {
      throw InvalidArgument("matrix has eigenvalue " + std::to_string(clamped(i)) + " below PSD tolerance");
    }
    if (clamped(i) < 0.0) clamped(i) = 0.0;
  }
  return vectors * clamped.asDiagonal() * vectors.transpose();
}

Matrix psd_sqrt(const Matrix& s) {
  if (s.rows() != s.cols()) throw InvalidArgument("psd_sqrt: matrix is not square");
  if (relative_asymmetry(s) > 1e-8) throw InvalidArgument("psd_sqrt: matrix is not symmetric");
  const auto [values, vectors] = symmetric_eigen(symmetrize(s));
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  Vector roots(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -kPsdClampTolerance * scale) {
      throw InvalidArgument("psd_sqrt: eigenvalue " + std::to_string(values(i)) + " is negative");
    }
    roots(i) = std::sqrt(std::max(values(i), 0.0));
  }
  return symmetrize(vectors * roots.asDiagonal() * vectors.transpose());
}

Matrix spd_inverse_sqrt(const Matrix& g) {
  require_positive_definite(g, "spd_inverse_sqrt");
  const auto [values, vectors] = symmetric_eigen(g);
  return symmetrize(vectors * values.cwiseSqrt().cwiseInverse().asDiagonal() * vectors.transpose());
}

Matrix similarity_sqrt(const Matrix& g, const Matrix& h) {
  require_positive_definite(g, "similarity_sqrt");
  if (h.rows() != g.rows() || h.cols() != g.cols()) throw InvalidArgument("similarity_sqrt: shape mismatch");
  const auto [values, vectors] = symmetric_eigen(g);
  const Vector root = values.cwiseSqrt();
  const Matrix g_half = vectors * root.asDiagonal() * vectors.transpose();
  const Matrix g_inv_half = vectors * root.cwiseInverse().asDiagonal() * vectors.transpose();
  const Matrix inner = psd_sqrt(symmetrize(g_inv_half * h * g_inv_half));
  return g_inv_half * inner * g_half;
}

double log_det_spd(const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("log_det_spd: matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace lbnn
