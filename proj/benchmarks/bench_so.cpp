#include <benchmark/benchmark.h>

#include <vector>

#include "common.hpp"
#include "mskrt/so.hpp"

using namespace mskrt;

namespace {

std::vector<SoProblem> problems() {
    const auto& m = bench::demo_model();
    const auto& tr = bench::walking().truth;
    std::vector<SoProblem> out;
    for (std::size_t k = 0; k < tr.q.size(); ++k) out.push_back(make_problem(m, tr.q[k], tr.tau[k]));
    return out;
}

} // namespace

// range(0) = 1: warm start from the previous solution, 0: cold start at zero
static void BM_SoSolve(benchmark::State& state) {
    const auto ps = problems();
    const bool warm = state.range(0) != 0;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(ps.front().f_max.size());
    Eigen::VectorXd a = zero;
    std::size_t k = 0;
    long iterations = 0;
    for (auto _ : state) {
        const ActivationResult r = solve_activation(ps[k], warm ? a : zero);
        a = r.a;
        iterations += r.iterations;
        k = (k + 1) % ps.size();
    }
    state.counters["active_set_iters"] =
        benchmark::Counter(static_cast<double>(iterations), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_SoSolve)->Arg(0)->Arg(1);

// whole logical engine over the recording for a given worker count
static void BM_LogicalEngine(benchmark::State& state) {
    const auto ps = problems();
    const auto& t = bench::walking().truth.t;
    for (auto _ : state) {
        SoEngineConfig cfg;
        cfg.workers = static_cast<std::size_t>(state.range(0));
        std::size_t emitted = 0;
        LogicalSoEngine engine(cfg, [&](const ActivationResult&, bool discarded) { emitted += !discarded; });
        for (std::size_t k = 0; k < ps.size(); ++k) {
            SoJob job{k, t[k], ps[k], record_event(EventLog{}, EventId::joint_angles_produced, t[k])};
            engine.submit(std::move(job), t[k] + 0.26);
        }
        engine.finish();
        benchmark::DoNotOptimize(emitted);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(ps.size()));
}
BENCHMARK(BM_LogicalEngine)->Arg(1)->Arg(4)->Arg(12);
