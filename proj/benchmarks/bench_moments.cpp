#include <benchmark/benchmark.h>

#include "nodal/moments.hpp"

using namespace nodal;

static void BM_Quadrature2D(benchmark::State& state) {
  const auto fs = enumerate_frequencies(2, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(second_moment_quadrature(fs));
}
BENCHMARK(BM_Quadrature2D)->Arg(25)->Arg(325)->Arg(1105)->Unit(benchmark::kMillisecond);

static void BM_QuadratureSymmetric(benchmark::State& state) {
  const auto fs = enumerate_frequencies(2, state.range(0));
  QuadratureOptions options;
  options.use_symmetry = true;
  for (auto _ : state) benchmark::DoNotOptimize(second_moment_quadrature(fs, options));
}
BENCHMARK(BM_QuadratureSymmetric)->Arg(325)->Arg(1105)->Unit(benchmark::kMillisecond);

static void BM_Quadrature3D(benchmark::State& state) {
  const auto fs = enumerate_frequencies(3, state.range(0));
  QuadratureOptions options;
  options.grid = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(second_moment_quadrature(fs, options));
}
BENCHMARK(BM_Quadrature3D)->Args({6, 64})->Args({14, 96})->Unit(benchmark::kMillisecond);

static void BM_GridMoment(benchmark::State& state) {
  const auto fs = enumerate_frequencies(2, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grid_power_moment(fs, 4, 512, 1));
}
BENCHMARK(BM_GridMoment)->Arg(325)->Unit(benchmark::kMillisecond);
