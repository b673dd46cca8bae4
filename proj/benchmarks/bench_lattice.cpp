#include <benchmark/benchmark.h>

#include "nodal/lattice.hpp"
#include "nodal/moments.hpp"

using namespace nodal;

static void BM_Enumerate2D(benchmark::State& state) {
  const auto e = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_frequencies(2, e));
}
BENCHMARK(BM_Enumerate2D)->Arg(325)->Arg(1105)->Arg(5525)->Arg(32045);

static void BM_Enumerate3D(benchmark::State& state) {
  const auto e = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_frequencies(3, e));
}
BENCHMARK(BM_Enumerate3D)->Arg(50)->Arg(1000)->Arg(10000);

static void BM_MultiplicityFormula(benchmark::State& state) {
  for (auto _ : state)
    for (std::int64_t e = 1; e <= 10000; ++e) benchmark::DoNotOptimize(multiplicity_formula_2d(e));
}
BENCHMARK(BM_MultiplicityFormula);

static void BM_FourTupleCount(benchmark::State& state) {
  const auto fs = enumerate_frequencies(static_cast<int>(state.range(0)), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(four_tuple_count(fs));
  state.counters["N"] = static_cast<double>(fs.multiplicity());
}
BENCHMARK(BM_FourTupleCount)->Args({2, 5525})->Args({2, 32045})->Args({3, 1000});

static void BM_FourthMoment(benchmark::State& state) {
  const auto fs = enumerate_frequencies(2, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(u_fourth_moment(fs));
}
BENCHMARK(BM_FourthMoment)->Arg(325)->Arg(5525);

static void BM_HalfDual(benchmark::State& state) {
  const auto fs = enumerate_frequencies(static_cast<int>(state.range(0)), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(half_dual_set(fs));
}
BENCHMARK(BM_HalfDual)->Args({2, 325})->Args({3, 14});
