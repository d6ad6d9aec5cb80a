#include <gtest/gtest.h>

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "lbnn/asymptotics.hpp"
#include "lbnn/error.hpp"
#include "lbnn/feature_kernel.hpp"
#include "lbnn/gig.hpp"
#include "lbnn/zero_temp.hpp"
#include "support.hpp"

namespace lbnn {
namespace {

using testing::gaussian_matrix;
using testing::random_spd;

GramSet grams_of(const Matrix& G, const Matrix& Gyy) { return GramSet{G, G, G, Gyy, std::nullopt}; }

GramSet random_grams(Eigen::Index p, Eigen::Index nd, std::uint64_t seed, Matrix* Y = nullptr) {
  const Matrix y = gaussian_matrix(p, nd, seed + 1);
  if (Y) *Y = y;
  return grams_of(random_spd(p, seed), y * y.transpose() / static_cast<double>(nd));
}

TEST(KernelWide, Examples) {
  const GramSet g = random_grams(3, 2, 1);
  EXPECT_EQ(kernel_wide(g, 0.0, 2.0), g.Gxx);
  EXPECT_LT((kernel_wide(grams_of(g.Gxx, g.Gxx), 0.3, kInfiniteBeta) - g.Gxx).cwiseAbs().maxCoeff(), 1e-12);
  const GramSet s = grams_of(Matrix::Ones(1, 1), Matrix::Constant(1, 1, 4.0));
  EXPECT_NEAR(kernel_wide(s, 0.1, kInfiniteBeta)(0, 0), 1.3, 1e-14);
  EXPECT_THROW(kernel_wide(g, 0.1, -1.0), InvalidArgument);
}

TEST(KernelLargeP, Examples) {
  Matrix Y;
  const GramSet g = random_grams(4, 1, 3, &Y);
  const int n1 = 10;
  const Vector y = Y.col(0);
  const double q = y.dot(g.Gxx.llt().solve(y));
  const Matrix expected = (1.0 - 0.1) * g.Gxx + (4.0 / n1) * y * y.transpose() / q;
  EXPECT_LT((kernel_large_p(g, Y, n1) - expected).cwiseAbs().maxCoeff(), 1e-12);

  // G = I and orthogonal columns scaled so that YᵀY = p I.
  const Matrix q2 = testing::random_orthogonal(4, 5).leftCols(2) * 2.0;
  const GramSet id = grams_of(Matrix::Identity(4, 4), q2 * q2.transpose() / 2.0);
  const Matrix k = kernel_large_p(id, q2, n1);
  EXPECT_LT((k - (1.0 - 0.2) * Matrix::Identity(4, 4) - q2 * q2.transpose() / n1).cwiseAbs().maxCoeff(), 1e-12);

  Matrix dup(4, 2);
  dup << y, y;
  EXPECT_THROW(kernel_large_p(g, dup, n1), InvalidArgument);
}

// p ≫ n₁: the saddle-point kernel against the zero-temperature kernel with E[1/λ] from
// direct GIG sampling (ν = (n₁ − p)/2 < 0 lies outside the regular scale-moment path).
TEST(KernelLargeP, AgreesWithSampledZeroTemperatureKernel) {
  const int p = 24, n1 = 8, n0 = 30;
  const Dataset ds = testing::teacher_dataset(p, 1, n0, 1, 12);
  const GramSet g = build_gram_set(ds);
  const MgigParams mp = zt_mgig_params(g, ds.Y, n1);
  const GigParams gp{mp.nu, mp.A(0, 0), mp.B(0, 0)};
  ASSERT_LT(gp.nu, 0.0);
  const int draws = 200000;
  double inv = 0.0;
  for (int i = 0; i < draws; ++i) {
    Stream s(77, static_cast<std::uint64_t>(i));
    inv += 1.0 / draw_gig(gp, s);
  }
  inv /= draws;
  const Matrix zt_corr = (ds.Y * inv * ds.Y.transpose() - g.Gxx) / n1;
  const Matrix lp_corr = kernel_large_p(g, ds.Y, n1) - g.Gxx;
  EXPECT_LT((zt_corr - lp_corr).norm() / zt_corr.norm(), 0.10);
}

TEST(CareLiSompolinsky, Examples) {
  Matrix Y = Matrix::Zero(3, 2);
  const GramSet g = grams_of(random_spd(3, 2), Matrix::Zero(3, 3));
  const CareSolution zero = care_li_sompolinsky(g, Y, 10, 0.3);
  EXPECT_LT((zero.L - 0.7 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(zero.residual, 1e-12);

  const GramSet one = grams_of(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  const double m = 2.0;
  const CareSolution s = care_li_sompolinsky(one, Matrix::Constant(1, 1, std::sqrt(m * 5)), 5, 0.2);
  const double l = s.L(0, 0);
  EXPECT_NEAR(l, 0.5 * (0.8 + std::sqrt(0.64 + 4 * m)), 1e-12);
  EXPECT_NEAR(l * l - 0.8 * l - m, 0.0, 1e-12);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Matrix Yr;
    const GramSet r = random_grams(5, 3, 100 + seed, &Yr);
    EXPECT_LT(care_li_sompolinsky(r, Yr, 12, 0.4).residual, 1e-9);
  }
  EXPECT_THROW(care_li_sompolinsky(g, Y, 10, 1.0), InvalidArgument);
}

TEST(KernelLiSompolinsky, Examples) {
  const GramSet g = random_grams(3, 2, 4);
  EXPECT_LT((kernel_li_sompolinsky(g, 0.3, 0.0) - g.Gxx).cwiseAbs().maxCoeff(), 1e-12);
  const double gy = 2.5, gamma = 0.2;
  const GramSet c = grams_of(Matrix::Identity(3, 3), gy * Matrix::Identity(3, 3));
  const Matrix k = kernel_li_sompolinsky(c, 0.0, gamma);
  EXPECT_LT((k - 0.5 * (1 + std::sqrt(1 + 4 * gamma * gy)) * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(kernel_li_sompolinsky_leading(g, 0.5, 0.1), 0.9 * g.Gxx + 0.2 * g.Gyy);
}

TEST(KernelLiSompolinsky, OffsetAgainstScaleRoute) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int p = 4, n1 = 9 + static_cast<int>(seed);
    Matrix Y;
    const GramSet g = random_grams(p, 1, 200 + seed, &Y);
    const double alpha = static_cast<double>(p) / n1, gamma = 1.0 / n1;
    const Matrix closed = kernel_li_sompolinsky(g, alpha, gamma);
    const Matrix L = care_li_sompolinsky(g, Y, n1, alpha).L;
    const Matrix route = (1.0 - gamma) * g.Gxx + Y * L.inverse() * Y.transpose() / n1;
    EXPECT_LT((closed - route - gamma * g.Gxx).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((closed - g.Gxx - Y * L.inverse() * Y.transpose() / n1).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((closed - closed.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(KernelAitchison, Examples) {
  const GramSet c = grams_of(Matrix::Identity(3, 3), 4.0 * Matrix::Identity(3, 3));
  const AitchisonSolution s = kernel_aitchison(c, 1.0);
  EXPECT_LT((s.K - 2.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(s.residual, 1e-12);

  const GramSet g = random_grams(3, 3, 6);
  EXPECT_LT((kernel_aitchison(g, 1e-9).K - g.Gxx).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_THROW(kernel_aitchison(g, 0.0), InvalidArgument);
  EXPECT_THROW(kernel_aitchison(g, 1.5), InvalidArgument);
}

TEST(KernelAitchison, UnitRatioSymmetricForms) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GramSet g = random_grams(4, 5, 300 + seed);
    const Matrix K = kernel_aitchison(g, 1.0).K;
    const Matrix left = g.Gxx * Matrix(g.Gxx.inverse() * g.Gyy).sqrt();
    const Matrix right = Matrix(g.Gyy * g.Gxx.inverse()).sqrt() * g.Gxx;
    EXPECT_LT((K - left).norm(), 1e-9 * K.norm());
    EXPECT_LT((K - right).norm(), 1e-9 * K.norm());
  }
}

TEST(KernelAitchison, ResidualsAndSymmetry) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const GramSet g = random_grams(5, 6, 400 + seed);
    const double gamma = 0.05 + 0.03 * static_cast<double>(seed);
    const AitchisonSolution s = kernel_aitchison(g, gamma);
    EXPECT_LT(s.residual, 1e-8 * g.Gyy.norm());
    EXPECT_LT((s.K - s.K.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Regimes, LeadingOrderConsistency) {
  const GramSet g = random_grams(4, 4, 9);
  std::vector<double> lx, ly;
  for (double gamma : {0.02, 0.04, 0.08}) {
    const Matrix d = kernel_li_sompolinsky_leading(g, 0.0, gamma) - kernel_aitchison(g, gamma).K;
    lx.push_back(std::log(gamma));
    ly.push_back(std::log(d.norm()));
  }
  const double slope = ((lx[0] - lx[1]) * (ly[0] - ly[1]) + (lx[2] - lx[1]) * (ly[2] - ly[1])) /
                       ((lx[0] - lx[1]) * (lx[0] - lx[1]) + (lx[2] - lx[1]) * (lx[2] - lx[1]));
  EXPECT_GE(slope, 1.8);
}

TEST(RegimeRatios, Validation) {
  const RegimeRatios r = RegimeRatios::from_sizes(3, 2, 10);
  EXPECT_DOUBLE_EQ(r.alpha, 0.3);
  EXPECT_DOUBLE_EQ(r.gamma, 0.2);
  EXPECT_THROW((RegimeRatios{1.0, 0.1}.validate()), InvalidArgument);
  EXPECT_THROW((RegimeRatios{0.1, 1.1}.validate()), InvalidArgument);
  EXPECT_THROW((RegimeRatios{-0.1, 0.1}.validate()), InvalidArgument);
}

}  // namespace
}  // namespace lbnn
