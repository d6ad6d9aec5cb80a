#pragma once

#include <Eigen/Dense>

namespace lbnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Condition number (2-norm) above which a PD matrix is treated as singular.
inline constexpr double kConditionCap = 1e12;
/// Eigenvalues of nominally PSD input down to this value are clamped to zero.
inline constexpr double kPsdClampTolerance = 1e-10;

/// Kronecker product A ⊗ B.
///
/// Paired with row-major vectorization, vec(A X B) = (A ⊗ Bᵀ) vec(X).
Matrix kron(const Matrix& a, const Matrix& b);

/// Row-major vectorization: entry (i, j) lands at index i * cols + j.
Vector vec_rows(const Matrix& m);
Matrix unvec_rows(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// ½(S + Sᵀ).
Matrix symmetrize(const Matrix& s);

/// ‖S − Sᵀ‖_F / max(‖S‖_F, tiny).
double relative_asymmetry(const Matrix& s);

/// Eigendecomposition S = V diag(values) Vᵀ of a symmetric matrix, values ascending.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

SymmetricEigen symmetric_eigen(const Matrix& s);

/// 2-norm condition number of a symmetric matrix; +inf when the smallest eigenvalue is ≤ 0.
double condition_number(const Matrix& s);

/// Throws InvalidArgument if `s` is not symmetric positive definite with condition ≤ cap.
void require_positive_definite(const Matrix& s, const char* what, double cap = kConditionCap);

/// Principal square root of a symmetric PSD matrix.
///
/// Eigenvalues in [-1e-10·max(1, ‖S‖₂), 0) are clamped to zero; anything more negative,
/// or asymmetry above 1e-8 relative, is rejected.
Matrix psd_sqrt(const Matrix& s);

/// Projects a nominally PSD matrix onto the PSD cone, rejecting negativity beyond
/// `tolerance` (absolute, on eigenvalues).
Matrix clamp_psd(const Matrix& s, double tolerance);

/// Inverse square root G^{-1/2} of an SPD matrix.
Matrix spd_inverse_sqrt(const Matrix& g);

/// Principal square root of G⁻¹H for G PD and H PSD.
///
/// Evaluated as G^{-1/2} · sqrt(G^{-1/2} H G^{-1/2}) · G^{1/2}; all spectra are real and
/// nonnegative so the root is well defined and G · result is symmetric.
Matrix similarity_sqrt(const Matrix& g, const Matrix& h);

/// log det of an SPD matrix via Cholesky. Throws NumericalError if not PD.
double log_det_spd(const Matrix& s);

}  // namespace lbnn
