#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "lbnn/importance.hpp"
#include "lbnn/parallel.hpp"
#include "lbnn/quadrature.hpp"
#include "lbnn/random.hpp"

namespace lbnn {
namespace {

static_assert(Stream::min() == 0);
static_assert(derive_seed(1, 2) != derive_seed(2, 1));

TEST(Stream, DeterministicAndIndexed) {
  Stream a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 10; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
}

TEST(Stream, UniformIsOpenInterval) {
  Stream s(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(ParallelFor, CoversAllIndicesAndRethrowsLowest) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  try {
    parallel_for(100, 3, [](std::size_t i) {
      if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "17");
  }
}

TEST(ParallelFor, WorkerResolution) {
  EXPECT_EQ(resolve_workers(3), 3);
  EXPECT_GE(resolve_workers(0), 1);
}

TEST(WeightedSums, MatchesDirectFormulas) {
  WeightedSums acc(2, 1);
  const std::vector<double> lw{-1000.0, -1001.0, -999.5, -1002.0};
  double sw = 0, sw2 = 0, m0 = 0, m1 = 0, o = 0;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    Vector f(2);
    f << static_cast<double>(i), 1.0 - static_cast<double>(i);
    acc.add(lw[i], f);
    const double w = std::exp(lw[i] + 1000.0);
    sw += w;
    sw2 += w * w;
    m0 += w * f(0);
    m1 += w * f(1);
    o += w * f(0) * f(0);
  }
  EXPECT_NEAR(acc.ess(), sw * sw / sw2, 1e-12);
  EXPECT_NEAR(acc.mean()(0), m0 / sw, 1e-12);
  EXPECT_NEAR(acc.mean()(1), m1 / sw, 1e-12);
  EXPECT_NEAR(acc.outer_mean()(0, 0), o / sw, 1e-12);
  EXPECT_NEAR(acc.log_total_weight(), std::log(sw) - 1000.0, 1e-12);
}

TEST(AccumulateBlocks, IndependentOfWorkersAndChunking) {
  const DrawFunction draw = [](std::int64_t i) {
    Stream s(99, static_cast<std::uint64_t>(i));
    Vector f(1);
    f(0) = s.uniform();
    return WeightedDraw{-3.0 * s.uniform(), f};
  };
  SamplingOptions one;
  one.workers = 1;
  SamplingOptions four;
  four.workers = 4;
  four.chunk_size = 37;
  const auto a = merge_all(accumulate_blocks(5000, 1, 1, draw, one));
  const auto b = merge_all(accumulate_blocks(5000, 1, 1, draw, four));
  EXPECT_EQ(a.count(), 5000);
  EXPECT_EQ(a.count(), b.count());
  // Chunking changes summation order, so agreement here is to rounding only.
  EXPECT_NEAR(a.mean()(0), b.mean()(0), 1e-13);
  SamplingOptions four_same = one;
  four_same.workers = 4;
  const auto c = merge_all(accumulate_blocks(5000, 1, 1, draw, four_same));
  EXPECT_EQ(a.mean()(0), c.mean()(0));
  EXPECT_EQ(a.ess(), c.ess());
}

TEST(Jackknife, UnweightedMeanMatchesIidStandardError) {
  const std::int64_t n = 20000;
  const DrawFunction draw = [](std::int64_t i) {
    Stream s(5, static_cast<std::uint64_t>(i));
    Vector f(1);
    f(0) = s.uniform();
    return WeightedDraw{0.0, f};
  };
  SamplingOptions opt;
  opt.workers = 2;
  const auto blocks = accumulate_blocks(n, 1, 0, draw, opt);
  ASSERT_EQ(blocks.size(), 20u);
  const auto jk = jackknife(blocks, [](const WeightedSums& w) { return w.mean(); });
  const double iid = std::sqrt(1.0 / 12.0 / static_cast<double>(n));
  EXPECT_NEAR(jk.standard_error(0), iid, 0.4 * iid);
  EXPECT_NEAR(jk.estimate(0), 0.5, 4 * iid);
}

TEST(LogSumExp, StableAndMergeable) {
  LogSumExp a, b;
  a.add(1000.0);
  a.add(1000.0);
  b.add(-1e6);
  a.merge(b);
  EXPECT_NEAR(a.value(), 1000.0 + std::log(2.0), 1e-12);
  LogSumExp empty;
  EXPECT_EQ(empty.value(), -std::numeric_limits<double>::infinity());
}

TEST(HalfLineExpectation, GammaMomentsAndNormalizer) {
  const double k = 2.5, theta = 0.7;
  const HalfLineExpectation q([&](double x) { return (k - 1.0) * std::log(x) - x / theta; });
  EXPECT_NEAR(q.log_normalizer(), std::lgamma(k) + k * std::log(theta), 1e-10);
  EXPECT_NEAR(q.expect([](double x) { return x; }), k * theta, 1e-10);
  EXPECT_NEAR(q.expect([](double x) { return x * x; }), k * (k + 1) * theta * theta, 1e-10);
  EXPECT_NEAR(q.expect([](double x) { return 1.0 / x; }), 1.0 / ((k - 1.0) * theta), 1e-10);
}

TEST(HalfLineExpectation, SharplyPeaked) {
  const double k = 512.0, theta = 1.0 / 512.0;
  const HalfLineExpectation q([&](double x) { return (k - 1.0) * std::log(x) - x / theta; });
  EXPECT_NEAR(q.expect([](double x) { return x; }), 1.0, 1e-10);
  const double var = q.expect([](double x) { return (x - 1.0) * (x - 1.0); });
  EXPECT_NEAR(var, k * theta * theta, 1e-10);
}

}  // namespace
}  // namespace lbnn
