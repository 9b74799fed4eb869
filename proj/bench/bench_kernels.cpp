#include <benchmark/benchmark.h>

#include "occrelax/gapx.hpp"

using namespace occrelax::gapx;

namespace {

struct Setup {
  PolarGrid grid;
  PolarField h;
  explicit Setup(int nr) : grid(nr, 4 * nr), h(randomField(grid, 42)) {}
};

void objective(benchmark::State& state, bool parallel) {
  const Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel ? objectiveParallel(s.grid, s.h)
                                      : objectiveSerial(s.grid, s.h));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.grid.size()));
}

void gradient(benchmark::State& state, bool parallel) {
  const Setup s(static_cast<int>(state.range(0)));
  PolarField g;
  for (auto _ : state) {
    if (parallel)
      gradientParallel(s.grid, s.h, g);
    else
      gradientSerial(s.grid, s.h, g);
    benchmark::DoNotOptimize(g.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.grid.size()));
}

void BM_ObjectiveSerial(benchmark::State& s) { objective(s, false); }
void BM_ObjectiveParallel(benchmark::State& s) { objective(s, true); }
void BM_GradientSerial(benchmark::State& s) { gradient(s, false); }
void BM_GradientParallel(benchmark::State& s) { gradient(s, true); }

}  // namespace

BENCHMARK(BM_ObjectiveSerial)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_ObjectiveParallel)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_GradientSerial)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_GradientParallel)->Arg(16)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
