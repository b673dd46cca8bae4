#include <benchmark/benchmark.h>

#include <memory>

#include "nodal/ensemble.hpp"
#include "nodal/leray_measure.hpp"

using namespace nodal;

namespace {

RandomEigenfunction field(int d, std::int64_t e) {
  auto fs = std::make_shared<const FrequencySet>(enumerate_frequencies(d, e));
  return sample(fs, 2024, 0);
}

}  // namespace

static void BM_Sample(benchmark::State& state) {
  auto fs = std::make_shared<const FrequencySet>(enumerate_frequencies(2, state.range(0)));
  std::uint64_t stream = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample(fs, 1, stream++));
}
BENCHMARK(BM_Sample)->Arg(325)->Arg(5525);

static void BM_Surface(benchmark::State& state) {
  const auto f = field(2, state.range(0));
  const int grid = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(leray_surface_2d(f, grid));
}
BENCHMARK(BM_Surface)->Args({25, 128})->Args({325, 304})->Args({325, 512})->Unit(benchmark::kMillisecond);

static void BM_Epsilon2D(benchmark::State& state) {
  const auto f = field(2, state.range(0));
  const int grid = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(leray_epsilon(f, 1e-3, grid));
}
BENCHMARK(BM_Epsilon2D)->Args({25, 128})->Args({325, 304})->Unit(benchmark::kMillisecond);

static void BM_Epsilon3D(benchmark::State& state) {
  const auto f = field(3, state.range(0));
  const int grid = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(leray_epsilon(f, 1e-3, grid));
}
BENCHMARK(BM_Epsilon3D)->Args({5, 32})->Args({14, 64})->Unit(benchmark::kMillisecond);

static void BM_FieldValueGradient(benchmark::State& state) {
  const auto f = field(2, state.range(0));
  FieldEvaluator eval(f.field());
  double x[2] = {0.123, 0.456};
  double g[2];
  for (auto _ : state) {
    x[0] += 1e-3;
    benchmark::DoNotOptimize(eval.value_gradient(x, g));
  }
}
BENCHMARK(BM_FieldValueGradient)->Arg(325)->Arg(5525);
