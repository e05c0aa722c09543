#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "mskrt/errors.hpp"
#include "mskrt/id.hpp"
#include "mskrt/model.hpp"
#include "mskrt/synth.hpp"

using namespace mskrt;

namespace {

const ChainModel& demo_model() {
    static const ChainModel m = load_model(fixtures::data_path("lower_body.json"));
    return m;
}

SynthOptions walking(double duration, double rate) {
    SynthOptions o = demo_synth_options(SynthOptions::Motion::walking);
    o.duration = duration;
    o.rate = rate;
    return o;
}

} // namespace

TEST_CASE("scripted derivatives agree with central differences") {
    const double rate = 2000.0, h = 1.0 / rate;
    const SynthResult r = synthesize_session(demo_model(), walking(3.0, rate));
    const auto& tr = r.truth;
    REQUIRE(tr.q.size() == 6000);
    double worst_qd = 0.0, worst_qdd = 0.0, scale_qd = 0.0, scale_qdd = 0.0;
    for (std::size_t k = 1; k + 1 < tr.q.size(); ++k) {
        const Eigen::VectorXd qd = (tr.q[k + 1] - tr.q[k - 1]) / (2.0 * h);
        const Eigen::VectorXd qdd = (tr.q[k + 1] - 2.0 * tr.q[k] + tr.q[k - 1]) / (h * h);
        worst_qd = std::max(worst_qd, (qd - tr.qd[k]).lpNorm<Eigen::Infinity>());
        worst_qdd = std::max(worst_qdd, (qdd - tr.qdd[k]).lpNorm<Eigen::Infinity>());
        scale_qd = std::max(scale_qd, tr.qd[k].lpNorm<Eigen::Infinity>());
        scale_qdd = std::max(scale_qdd, tr.qdd[k].lpNorm<Eigen::Infinity>());
    }
    CHECK(scale_qd > 1.0);
    CHECK(scale_qdd > 10.0);
    CHECK(worst_qd < 1e-4 * scale_qd);
    CHECK(worst_qdd < 1e-3 * scale_qdd);
}

TEST_CASE("still stance holds the default pose") {
    SynthOptions o = demo_synth_options(SynthOptions::Motion::standing);
    o.duration = 1.0;
    const SynthResult r = synthesize_session(demo_model(), o);
    const double weight = demo_model().total_mass() * demo_model().gravity().norm();
    const auto tx = static_cast<Eigen::Index>(*demo_model().find_coordinate("pelvis_tx"));
    for (std::size_t k = 0; k < r.truth.t.size(); ++k) {
        CHECK(r.truth.q[k].isApprox(demo_model().default_pose()));
        CHECK(r.truth.qd[k].isZero());
        CHECK(r.truth.force_left[k] == doctest::Approx(weight / 2.0));
        CHECK(r.truth.force_right[k] == doctest::Approx(weight / 2.0));
        // vertical support equals weight, so the root carries no net force
        CHECK(r.truth.tau[k].segment(tx, 3).lpNorm<Eigen::Infinity>() < 1e-9 * weight);
    }
}

TEST_CASE("orientations follow the segment poses under the heading") {
    const SynthOptions o = walking(2.0, 100.0);
    const SynthResult r = synthesize_session(demo_model(), o);
    const Quat heading(Eigen::AngleAxisd(o.heading, Vec3::UnitZ()));
    for (std::size_t k = 0; k < r.session.orientations.size(); k += 17) {
        const auto poses = forward_kinematics(demo_model(), r.truth.q[k]);
        const auto& frame = r.session.orientations[k];
        REQUIRE(frame.samples.size() == o.sensors.size());
        for (const auto& [seg, mount] : o.sensors) {
            const auto name = *demo_model().mapping().frame_for(seg);
            const auto it = std::find_if(frame.samples.begin(), frame.samples.end(),
                                         [&](const OrientationSample& s) { return s.frame == name; });
            REQUIRE(it != frame.samples.end());
            const Quat expect = heading * poses[demo_model().segment_index(seg)].rotation * mount;
            CHECK(std::abs(std::abs(it->quat.dot(expect)) - 1.0) < 1e-12);
        }
    }
    for (std::size_t k = 0; k < r.truth.t.size(); ++k) {
        CHECK(std::vector<double>(r.truth.tau[k].data(), r.truth.tau[k].data() + r.truth.tau[k].size()) ==
              r.session.reftau[k].values);
    }
}

TEST_CASE("insole transport keeps every tick and is reproducible") {
    const SynthOptions o = walking(4.0, 100.0);
    const SynthResult a = synthesize_session(demo_model(), o);
    const SynthResult b = synthesize_session(demo_model(), o);
    SynthOptions other = o;
    other.seed = o.seed + 1;
    const SynthResult c = synthesize_session(demo_model(), other);

    std::map<Side, std::set<std::int64_t>> ticks;
    std::size_t records = 0, swapped = 0;
    double last = -1.0;
    for (std::size_t i = 0; i < a.session.bursts.size(); ++i) {
        const auto& burst = a.session.bursts[i];
        CHECK(burst.arrival_t >= last);
        last = burst.arrival_t;
        for (std::size_t j = 0; j < burst.records.size(); ++j) {
            const auto& rec = burst.records[j];
            ticks[rec.side].insert(rec.tick);
            const std::int64_t k = rec.tick - (rec.side == Side::left ? o.left_tick0 : o.right_tick0);
            // never delivered before it was measured plus the minimum latency
            CHECK(burst.arrival_t >= static_cast<double>(k) / o.rate + o.min_latency - 1e-6);
            if (j > 0 && rec.side == burst.records[j - 1].side && rec.tick < burst.records[j - 1].tick) ++swapped;
            ++records;
        }
    }
    const std::size_t n = a.truth.t.size();
    for (Side side : {Side::left, Side::right}) {
        const std::int64_t t0 = side == Side::left ? o.left_tick0 : o.right_tick0;
        CHECK(ticks[side].size() == n);
        CHECK(*ticks[side].begin() == t0);
        CHECK(*ticks[side].rbegin() == t0 + static_cast<std::int64_t>(n) - 1);
    }
    CHECK(records > 2 * n);  // repeats
    CHECK(swapped > 0);
    REQUIRE(a.session.sync);
    CHECK(a.session.sync->left_tick == o.left_tick0);

    REQUIRE(a.session.bursts.size() == b.session.bursts.size());
    for (std::size_t i = 0; i < a.session.bursts.size(); ++i) {
        CHECK(a.session.bursts[i].arrival_t == b.session.bursts[i].arrival_t);
        CHECK(a.session.bursts[i].records.size() == b.session.bursts[i].records.size());
    }
    bool differs = a.session.bursts.size() != c.session.bursts.size();
    for (std::size_t i = 0; !differs && i < a.session.bursts.size(); ++i) {
        differs = a.session.bursts[i].arrival_t != c.session.bursts[i].arrival_t;
    }
    CHECK(differs);
}

TEST_CASE("invalid synth options") {
    SynthOptions o = walking(1.0, 100.0);
    o.rate = 0.0;
    CHECK_THROWS_AS(synthesize_session(demo_model(), o), Error);
    o = walking(1.0, 100.0);
    o.max_latency = o.min_latency / 2.0;
    CHECK_THROWS_AS(synthesize_session(demo_model(), o), Error);
    o = walking(1.0, 100.0);
    o.insoles.erase("left");
    CHECK_THROWS_AS(synthesize_session(demo_model(), o), Error);
    o = walking(1.0, 100.0);
    o.sensors["no_such_segment"] = Quat::Identity();
    CHECK_THROWS_AS(synthesize_session(demo_model(), o), Error);
}
