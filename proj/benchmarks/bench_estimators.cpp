#include <benchmark/benchmark.h>

#include <random>

#include "lbnn/feature_kernel.hpp"
#include "lbnn/gig.hpp"
#include "lbnn/posterior_mixture.hpp"
#include "lbnn/scale_prior.hpp"

namespace {

using namespace lbnn;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n01(rng);
  return m;
}

Dataset make_dataset(Eigen::Index p, Eigen::Index nd) {
  Dataset ds;
  ds.X = gaussian(p, 2 * p, 1);
  ds.Y = gaussian(p, nd, 2);
  ds.Xhat = gaussian(p / 2 + 1, 2 * p, 3);
  return ds;
}

Matrix spd(Eigen::Index n) {
  const Matrix a = gaussian(n, n + 2, 4);
  return a * a.transpose() / static_cast<double>(n + 2) + 0.5 * Matrix::Identity(n, n);
}

void BM_GpComponents(benchmark::State& state) {
  const auto p = state.range(0), nd = state.range(1);
  const Dataset ds = make_dataset(p, nd);
  const GramSet g = build_gram_set(ds);
  const Matrix L = spd(nd);
  for (auto _ : state) benchmark::DoNotOptimize(gp_components(g, L, 1.0, ds.Y));
}
BENCHMARK(BM_GpComponents)->Args({4, 1})->Args({8, 2})->Args({16, 4})->Args({32, 4});

void BM_MixtureComponent(benchmark::State& state) {
  const auto p = state.range(0), nd = state.range(1);
  const Dataset ds = make_dataset(p, nd);
  const ScaleMixture mix(build_gram_set(ds), ds.Y, 1.0);
  const Matrix L = spd(nd);
  for (auto _ : state) benchmark::DoNotOptimize(mix.component(L));
}
BENCHMARK(BM_MixtureComponent)->Args({4, 1})->Args({8, 2})->Args({16, 4})->Args({32, 4});

void BM_MixtureDelta(benchmark::State& state) {
  const auto p = state.range(0), nd = state.range(1);
  const Dataset ds = make_dataset(p, nd);
  const ScaleMixture mix(build_gram_set(ds), ds.Y, 1.0);
  const Matrix L = spd(nd);
  for (auto _ : state) benchmark::DoNotOptimize(mix.delta_and_weight(L));
}
BENCHMARK(BM_MixtureDelta)->Args({4, 1})->Args({8, 2})->Args({16, 4})->Args({32, 4});

void BM_DrawScale(benchmark::State& state) {
  const int n1 = static_cast<int>(state.range(0));
  const NetworkShape shape{{8, n1, 2}, 1.0};
  Stream stream(7);
  for (auto _ : state) benchmark::DoNotOptimize(draw_scale(shape, stream));
}
BENCHMARK(BM_DrawScale)->Arg(16)->Arg(256)->Arg(1024);

void BM_DrawGig(benchmark::State& state) {
  const GigParams p{0.5, 2.0, 3.0};
  Stream stream(9);
  for (auto _ : state) benchmark::DoNotOptimize(draw_gig(p, stream));
}
BENCHMARK(BM_DrawGig);

void BM_MeanKernel(benchmark::State& state) {
  const Dataset ds = make_dataset(4, 1);
  const NetworkShape shape{{8, 32, 1}, 10.0};
  SamplingOptions opts;
  opts.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(mean_kernel(ds, shape, 10000, 3, opts));
}
BENCHMARK(BM_MeanKernel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
