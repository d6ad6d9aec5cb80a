#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "lbnn/dataset.hpp"
#include "lbnn/linalg.hpp"

namespace lbnn::testing {

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Matrix random_spd(Eigen::Index n, std::uint64_t seed, double ridge = 0.5) {
  const Matrix a = gaussian_matrix(n, n + 2, seed);
  Matrix s = a * a.transpose() / static_cast<double>(n + 2);
  s.diagonal().array() += ridge;
  return symmetrize(s);
}

inline Matrix random_orthogonal(Eigen::Index n, std::uint64_t seed) {
  const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(n, n, seed));
  return qr.householderQ() * Matrix::Identity(n, n);
}

inline Dataset random_dataset(Eigen::Index p, Eigen::Index ph, Eigen::Index n0, Eigen::Index nd, std::uint64_t seed) {
  Dataset ds;
  ds.X = gaussian_matrix(p, n0, seed);
  ds.Y = gaussian_matrix(p, nd, seed + 1);
  ds.Xhat = gaussian_matrix(ph, n0, seed + 2);
  return ds;
}

// Targets generated by a linear teacher, so the data are exactly interpolatable.
inline Dataset teacher_dataset(Eigen::Index p, Eigen::Index ph, Eigen::Index n0, Eigen::Index nd, std::uint64_t seed) {
  Dataset ds = random_dataset(p, ph, n0, nd, seed);
  ds.Y = ds.X * gaussian_matrix(n0, nd, seed + 3) / std::sqrt(static_cast<double>(n0));
  return ds;
}

// d = 2, n0 = 3, n1 = 5, n2 = 1, p = 2, p̂ = 2.
inline Dataset reference_dataset() {
  Dataset ds;
  ds.X.resize(2, 3);
  ds.X << 1.0, 0.4, -0.6,
          -0.3, 1.1, 0.5;
  ds.Y.resize(2, 1);
  ds.Y << 0.8, -0.5;
  ds.Xhat.resize(2, 3);
  ds.Xhat << 0.7, -0.2, 0.3,
             0.1, 0.9, -1.0;
  return ds;
}

// Closed-form GP regression posterior with kernel blocks (K, k*, k**) and noise 1/β.
struct DenseGp {
  Vector mean;
  Matrix cov;
};

inline DenseGp dense_gp(const Matrix& K, const Matrix& Ks, const Matrix& Kss, const Vector& y, double beta) {
  Matrix A = K;
  A.diagonal().array() += 1.0 / beta;
  const Eigen::LDLT<Matrix> ldlt(A);
  return {Ks.transpose() * ldlt.solve(y), Kss - Ks.transpose() * ldlt.solve(Ks)};
}

}  // namespace lbnn::testing
