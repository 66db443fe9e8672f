#include "wou/grid.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

using namespace wou;

void BM_GridElliptic(benchmark::State& state)
{
    grid::GridSpec spec;
    spec.dim = static_cast<int>(state.range(0));
    spec.mesh = 1.0 / static_cast<double>(state.range(1));
    const grid::GridOperator op(weights::huber(spec.dim, 0.5), spec);
    const auto f = [](VecIn x) { return std::tanh(x[0]); };
    for (auto _ : state) benchmark::DoNotOptimize(op.solve_elliptic(f, 1.0).values.data());
    state.counters["nodes"] = static_cast<double>(spec.size());
}
BENCHMARK(BM_GridElliptic)->Args({1, 64})->Args({1, 256})->Args({2, 8})->Args({2, 16})->Unit(benchmark::kMillisecond);

} // namespace
