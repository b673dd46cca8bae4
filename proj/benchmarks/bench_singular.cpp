#include <benchmark/benchmark.h>

#include <vector>

#include "nodal/singular.hpp"

using namespace nodal;

static void BM_ClassifyCubes(benchmark::State& state) {
  const auto fs = enumerate_frequencies(static_cast<int>(state.range(0)), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(classify_cubes(fs, 0, 3, 1));
}
BENCHMARK(BM_ClassifyCubes)->Args({2, 25})->Args({2, 325})->Args({3, 6})->Unit(benchmark::kMillisecond);

static void BM_UBounds(benchmark::State& state) {
  const auto fs = enumerate_frequencies(2, 325);
  const auto dec = classify_cubes(fs, 0, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(u_bounds_check(fs, dec, state.range(0), 1, true));
}
BENCHMARK(BM_UBounds)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_Hessian(benchmark::State& state) {
  const auto fs = enumerate_frequencies(2, 325);
  const std::vector<double> origin(2, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(hessian_definiteness(fs, origin, 1));
}
BENCHMARK(BM_Hessian);
