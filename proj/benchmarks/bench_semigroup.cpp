#include "wou/semigroup.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace wou;

void BM_EulerMaruyamaSteps(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const ConvexWeight w = weights::huber(n, 0.5);
    mc::DiffusionConfig cfg;
    cfg.paths = 1000;
    cfg.dt = 1e-2;
    const Vec xi = Vec::Zero(n);
    for (auto _ : state) benchmark::DoNotOptimize(mc::simulate_terminal(w, xi, 1.0, cfg).data());
    state.SetItemsProcessed(state.iterations() * cfg.paths * 100);
}
BENCHMARK(BM_EulerMaruyamaSteps)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ResolventApply(benchmark::State& state)
{
    mc::DiffusionConfig cfg;
    cfg.paths = 500;
    cfg.dt = 2e-2;
    const SmoothFn f = fns::tanh_ridge(Vec::Ones(2));
    const Vec xi = Vec::Zero(2);
    for (auto _ : state) benchmark::DoNotOptimize(mc::resolvent_apply(weights::zero(2), f, 1.0, xi, cfg).mean);
}
BENCHMARK(BM_ResolventApply)->Unit(benchmark::kMillisecond);

} // namespace
