#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "common.hpp"
#include "mskrt/filter.hpp"
#include "mskrt/telemetry.hpp"

using namespace mskrt;

// one push of the sliding spline filter over all model coordinates
static void BM_SlidingSpline(benchmark::State& state) {
    const auto& tr = bench::walking().truth;
    SplineWindow win;
    win.window = static_cast<std::size_t>(state.range(0));
    win.delay = win.window / 2;
    SlidingSplineFilter f(win, static_cast<std::size_t>(tr.q.front().size()));
    std::size_t k = 0;
    double t = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.push(t, tr.q[k]));
        t += 0.01;
        k = (k + 1) % tr.q.size();
    }
}
BENCHMARK(BM_SlidingSpline)->Arg(20)->Arg(50);

static void BM_EcdfQuantile(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> E(4.0);
    std::vector<double> x(static_cast<std::size_t>(state.range(0)));
    for (double& v : x) v = 0.26 + E(rng) / 100.0;
    for (auto _ : state) benchmark::DoNotOptimize(ecdf_quantile(x, 0.95));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EcdfQuantile)->Range(1 << 10, 1 << 16)->Complexity();
