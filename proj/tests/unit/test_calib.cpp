#include <doctest.h>

#include <filesystem>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "mskrt/calib.hpp"

using namespace mskrt;

namespace {

const ChainModel& lower_body() {
    static const ChainModel m = load_model(fixtures::data_path("lower_body.json"));
    return m;
}

Quat random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    return Quat(N(rng), N(rng), N(rng), N(rng)).normalized();
}

struct Rig {
    std::map<std::string, Quat> offsets;
    double heading = 0.7;

    // What a sensor reports when its segment has rotation `seg`.
    Quat measure(const std::string& frame, const Quat& seg) const {
        return rot_z(-heading) * seg * offsets.at(frame);
    }
};

Rig make_rig(const ChainModel& m, std::mt19937_64& rng) {
    Rig rig;
    for (const auto& p : m.mapping().pairs()) {
        rig.offsets[p.frame] = p.frame == "pelvis_link" ? Quat::Identity() : random_rotation(rng);
    }
    return rig;
}

std::map<std::string, std::vector<OrientationSample>> still_frames(const ChainModel& m, const Rig& rig,
                                                                   std::size_t n) {
    const auto poses = forward_kinematics(m, m.default_pose());
    std::map<std::string, std::vector<OrientationSample>> out;
    for (const auto& p : m.mapping().pairs()) {
        const Quat seg = poses[m.segment_index(p.segment)].rotation;
        for (std::size_t k = 0; k < n; ++k) {
            out[p.frame].push_back({0.01 * static_cast<double>(k), p.frame, rig.measure(p.frame, seg)});
        }
    }
    return out;
}

} // namespace

TEST_CASE("average of symmetric perturbations is the center") {
    const Quat center = euler_zxy(0.4, -0.3, 1.2);
    std::vector<Quat> samples;
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 d = Vec3::Zero();
        d[axis] = 0.05;
        samples.push_back(center * Quat(so3_exp(d)));
        samples.push_back(center * Quat(so3_exp(-d)));
    }
    // sign of each sample must not matter
    samples[1].coeffs() *= -1.0;
    const Quat avg = average_quaternions(samples);
    CHECK(geodesic_distance(avg, center) < 1e-7);
    CHECK(avg.w() >= 0.0);
}

TEST_CASE("average rejects ambiguous and invalid input") {
    const std::vector<Quat> opposite{Quat::Identity(), Quat(rot_x(std::numbers::pi))};
    CHECK_THROWS_AS(average_quaternions(opposite), AmbiguousAverageError);
    CHECK_THROWS(average_quaternions(std::vector<Quat>{}));
    CHECK_THROWS(average_quaternions(std::vector<Quat>{Quat(2.0, 0.0, 0.0, 0.0)}));
}

TEST_CASE("global calibration recovers segment orientations at new poses") {
    const ChainModel& m = lower_body();
    std::mt19937_64 rng(21);
    const Rig rig = make_rig(m, rng);
    CalibrationOptions opt;
    opt.heading_reference = "pelvis_link";
    const CalibrationSet set = calibrate(m, m.default_pose(), still_frames(m, rig, 10), opt);
    CHECK(set.heading_correction == doctest::Approx(rig.heading).epsilon(1e-12));

    std::uniform_real_distribution<double> U(-0.5, 0.5);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd q = m.default_pose();
        for (Eigen::Index i = 0; i < q.size(); ++i) q[i] += U(rng);
        const auto poses = forward_kinematics(m, q);
        for (const auto& p : m.mapping().pairs()) {
            const Quat seg = poses[m.segment_index(p.segment)].rotation;
            CHECK(geodesic_distance(set.apply(p.frame, rig.measure(p.frame, seg)), seg) < 1e-6);
        }
    }
    CHECK_THROWS_AS(set.apply("unknown", Quat::Identity()), ValidationError);
}

TEST_CASE("per-sensor headings reproduce the calibration pose") {
    const ChainModel& m = lower_body();
    std::mt19937_64 rng(23);
    const Rig rig = make_rig(m, rng);
    CalibrationOptions opt;
    opt.mode = HeadingMode::per_sensor;
    const CalibrationSet set = calibrate(m, m.default_pose(), still_frames(m, rig, 5), opt);
    const auto poses = forward_kinematics(m, m.default_pose());
    for (const auto& p : m.mapping().pairs()) {
        const Quat seg = poses[m.segment_index(p.segment)].rotation;
        CHECK(geodesic_distance(set.apply(p.frame, rig.measure(p.frame, seg)), seg) < 1e-6);
    }
}

TEST_CASE("calibration reports missing and unmapped sensors") {
    const ChainModel& m = lower_body();
    std::mt19937_64 rng(29);
    const Rig rig = make_rig(m, rng);
    auto frames = still_frames(m, rig, 3);

    CalibrationOptions opt;
    opt.required = {"ghost_frame"};
    CHECK_THROWS_AS(calibrate(m, m.default_pose(), frames, opt), ValidationError);

    auto no_ref = frames;
    no_ref.erase("pelvis_link");
    CHECK_THROWS_AS(calibrate(m, m.default_pose(), no_ref, {}), ValidationError);

    auto extra = frames;
    extra["ghost_frame"] = frames.begin()->second;
    CHECK_THROWS_AS(calibrate(m, m.default_pose(), extra, {}), ValidationError);
}

TEST_CASE("calibration survives a JSON round trip") {
    const ChainModel& m = lower_body();
    std::mt19937_64 rng(31);
    const Rig rig = make_rig(m, rng);
    const CalibrationSet set = calibrate(m, m.default_pose(), still_frames(m, rig, 2), {});
    const CalibrationSet back = calibration_from_json(calibration_to_json(set));
    CHECK(back.mode == set.mode);
    CHECK(back.heading_correction == doctest::Approx(set.heading_correction));
    REQUIRE(back.sensors.size() == set.sensors.size());
    for (const auto& [name, c] : set.sensors) {
        CHECK(back.sensors.at(name).segment == c.segment);
        CHECK(geodesic_distance(back.sensors.at(name).offset, c.offset) < 1e-7);
    }

    const auto path = std::filesystem::temp_directory_path() / "mskrt_calib_roundtrip.json";
    save_calibration(path, set);
    CHECK(load_calibration(path).sensors.size() == set.sensors.size());
    std::filesystem::remove(path);

    CHECK_THROWS_AS(calibration_from_json("{"), ParseError);
    CHECK_THROWS_AS(calibration_from_json(R"({"mode": "sideways", "sensors": {}})"), ParseError);
}
