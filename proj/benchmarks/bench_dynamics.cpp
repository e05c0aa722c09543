#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "common.hpp"
#include "mskrt/calib.hpp"
#include "mskrt/id.hpp"
#include "mskrt/ik.hpp"

using namespace mskrt;

static void BM_Rne(benchmark::State& state) {
    const auto& m = bench::demo_model();
    const auto& tr = bench::walking().truth;
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rne(m, tr.q[k], tr.qd[k], tr.qdd[k]));
        k = (k + 1) % tr.q.size();
    }
}
BENCHMARK(BM_Rne);

static void BM_MomentArms(benchmark::State& state) {
    const auto& m = bench::demo_model();
    const auto& tr = bench::walking().truth;
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(moment_arms(m, tr.q[k]));
        k = (k + 1) % tr.q.size();
    }
}
BENCHMARK(BM_MomentArms);

// warm-started orientation IK, one frame per iteration
static void BM_IkFrame(benchmark::State& state) {
    const auto& m = bench::demo_model();
    const auto& s = bench::walking().session;
    std::map<std::string, std::vector<OrientationSample>> still;
    for (std::size_t k = 0; k < 10; ++k) {
        for (const auto& smp : s.orientations[k].samples) still[smp.frame].push_back(smp);
    }
    const CalibrationSet calib = calibrate(m, m.default_pose(), still);
    Eigen::VectorXd q = m.default_pose();
    std::size_t k = 0;
    for (auto _ : state) {
        const IkResult r = solve_frame(m, calib, s.orientations[k], q);
        q = r.q;
        benchmark::DoNotOptimize(q.data());
        if (++k == s.orientations.size()) {
            k = 0;
            q = m.default_pose();
        }
    }
}
BENCHMARK(BM_IkFrame);
