#pragma once

#include <string>

#include "mskrt/model.hpp"
#include "mskrt/synth.hpp"

namespace bench {

inline const mskrt::ChainModel& demo_model() {
    static const mskrt::ChainModel m =
        mskrt::load_model(std::string(MSKRT_BENCH_DATA_DIR) + "/lower_body.json");
    return m;
}

// 3 s of scripted walking at 100 Hz, shared by all benchmarks
inline const mskrt::SynthResult& walking() {
    static const mskrt::SynthResult r = [] {
        auto o = mskrt::demo_synth_options(mskrt::SynthOptions::Motion::walking);
        o.duration = 3.0;
        return mskrt::synthesize_session(demo_model(), o);
    }();
    return r;
}

} // namespace bench
