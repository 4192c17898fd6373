// Serial reference vs OpenMP assembly for the data-parallel kernels.
#include "gppl/kernel.hpp"
#include "gppl/svi.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

gppl::Matrix random_features(gppl::Index n, gppl::Index d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  gppl::Matrix x(n, d);
  for (gppl::Index i = 0; i < n; ++i) {
    for (gppl::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  return x;
}

gppl::KernelConfig unit_kernel(gppl::Index d) {
  gppl::KernelConfig cfg;
  cfg.lengthscales = gppl::Vector::Ones(d);
  return cfg;
}

void BM_KernelMatrixSerial(benchmark::State& state) {
  const auto x = random_features(state.range(0), 32, 1);
  const auto cfg = unit_kernel(32);
  for (auto _ : state) benchmark::DoNotOptimize(gppl::kernel_matrix_serial(x, x, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_KernelMatrixParallel(benchmark::State& state) {
  const auto x = random_features(state.range(0), 32, 1);
  const auto cfg = unit_kernel(32);
  for (auto _ : state) benchmark::DoNotOptimize(gppl::kernel_matrix(x, x, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_AssignSerial(benchmark::State& state) {
  const auto x = random_features(state.range(0), 32, 2);
  const auto centers = random_features(100, 32, 3);
  for (auto _ : state) benchmark::DoNotOptimize(gppl::assign_to_centers_serial(x, centers));
}

void BM_AssignParallel(benchmark::State& state) {
  const auto x = random_features(state.range(0), 32, 2);
  const auto centers = random_features(100, 32, 3);
  for (auto _ : state) benchmark::DoNotOptimize(gppl::assign_to_centers(x, centers));
}

}  // namespace

BENCHMARK(BM_KernelMatrixSerial)->Arg(250)->Arg(500)->Arg(1000);
BENCHMARK(BM_KernelMatrixParallel)->Arg(250)->Arg(500)->Arg(1000);
BENCHMARK(BM_AssignSerial)->Arg(2000)->Arg(10000);
BENCHMARK(BM_AssignParallel)->Arg(2000)->Arg(10000);

BENCHMARK_MAIN();
