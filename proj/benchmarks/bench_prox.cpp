#include "wou/prox.hpp"
#include "wou/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace wou;

Vec point(int n)
{
    NormalStream rng(3, 0);
    Vec x(n);
    for (auto& v : x) v = 2.0 * rng.next();
    return x;
}

void BM_ProxHuber(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const ConvexWeight w = weights::huber(n, 0.5);
    const Vec x = point(n);
    for (auto _ : state) benchmark::DoNotOptimize(prox::prox_point(w, x, 1.0).envelope);
}
BENCHMARK(BM_ProxHuber)->Arg(1)->Arg(8)->Arg(64);

void BM_ProxBundleL1(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const ConvexWeight w = weights::l1(n);
    const Vec x = point(n);
    for (auto _ : state) benchmark::DoNotOptimize(prox::prox_point(w, x, 1.0).envelope);
}
BENCHMARK(BM_ProxBundleL1)->Arg(1)->Arg(8);

} // namespace
