#include "mskrt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mskrt/errors.hpp"
#include "mskrt/id.hpp"

namespace mskrt {

InsoleSetup default_insole(const std::string& body) {
    InsoleSetup s;
    s.body = body;
    s.mount.rotation = rot_x(-std::numbers::pi / 2.0);
    s.mount.translation = Vec3(0.0, -0.01, 0.0);
    return s;
}

SynthOptions demo_synth_options(SynthOptions::Motion motion) {
    SynthOptions o;
    o.motion = motion;
    if (motion == SynthOptions::Motion::standing) {
        o.duration = 2.0;
        o.calibration_s = 2.0;
    }
    const double quarter = std::numbers::pi / 2.0;
    // Thigh and shank units sit on the lateral side, i.e. turned about the
    // segment's long axis; the pelvis unit is tilted about its forward axis.
    o.sensors = {
        {"pelvis", rot_x(0.2)},
        {"torso", Quat::Identity()},
        {"femur_r", rot_y(quarter)},
        {"femur_l", rot_y(-quarter)},
        {"tibia_r", rot_y(quarter)},
        {"tibia_l", rot_y(-quarter)},
        {"calcn_r", rot_z(0.1)},
        {"calcn_l", rot_z(0.1)},
    };
    o.insoles = {{"left", default_insole("calcn_l")}, {"right", default_insole("calcn_r")}};
    return o;
}

namespace {

struct Harmonic {
    int k;
    double amplitude;
    double phase;
};

struct Trajectory {
    double offset = 0.0;      // cycle fraction added to the stride phase
    double mean = 0.0;
    std::vector<Harmonic> terms;
};

struct Value {
    double q = 0.0, qd = 0.0, qdd = 0.0;
};

Value evaluate(const Trajectory& tr, double t, double period) {
    const double omega = 2.0 * std::numbers::pi / period;
    Value v{tr.mean, 0.0, 0.0};
    for (const Harmonic& h : tr.terms) {
        const double w = h.k * omega;
        const double arg = w * (t + tr.offset * period) + h.phase;
        v.q += h.amplitude * std::cos(arg);
        v.qd -= h.amplitude * w * std::sin(arg);
        v.qdd -= h.amplitude * w * w * std::cos(arg);
    }
    return v;
}

std::map<std::string, Trajectory> gait_table() {
    const double two_pi = 2.0 * std::numbers::pi;
    std::map<std::string, Trajectory> table;
    for (const auto& [side, offset] : {std::pair<std::string, double>{"r", 0.0}, {"l", 0.5}}) {
        table["hip_flexion_" + side] = {offset, 0.15, {{1, 0.32, 0.0}, {2, 0.03, -1.5707963}}};
        table["hip_adduction_" + side] = {offset, 0.0, {{1, 0.05, 0.5}}};
        table["hip_rotation_" + side] = {offset, 0.0, {{1, 0.04, 1.0}}};
        table["knee_angle_" + side] = {offset, 0.5, {{1, 0.42, -two_pi * 0.72}, {2, 0.08, -two_pi * 0.3}}};
        table["ankle_angle_" + side] = {offset, 0.0, {{1, 0.08, 1.2}, {2, 0.12, -0.4}}};
        table["subtalar_angle_" + side] = {offset, 0.0, {{1, 0.04, 0.3}}};
    }
    table["pelvis_tilt"] = {0.0, 0.0, {{2, 0.03, 0.0}}};
    table["pelvis_list"] = {0.0, 0.0, {{1, 0.04, 0.5}}};
    table["pelvis_rotation"] = {0.0, 0.0, {{1, 0.06, 0.0}}};
    table["lumbar_extension"] = {0.0, 0.0, {{2, 0.02, 0.3}}};
    table["lumbar_bending"] = {0.0, 0.0, {{1, 0.03, 0.2}}};
    table["lumbar_rotation"] = {0.0, 0.0, {{1, 0.05, std::numbers::pi}}};
    return table;
}

// Quintic smoothstep and its first two time derivatives.
Value blend(double t, double start, double length) {
    if (t <= start) return {0.0, 0.0, 0.0};
    if (t >= start + length) return {1.0, 0.0, 0.0};
    const double u = (t - start) / length;
    return {u * u * u * (10.0 - 15.0 * u + 6.0 * u * u),
            30.0 * u * u * (1.0 - u) * (1.0 - u) / length,
            (60.0 * u - 180.0 * u * u + 120.0 * u * u * u) / (length * length)};
}

struct Contact {
    double force = 0.0;
    double cop_x = 0.0;
    double cop_y = 0.0;
};

Contact gait_contact(double psi, double body_weight) {
    constexpr double stance = 0.6;
    Contact c{0.0, 0.10, 0.0};
    if (psi < stance) {
        const double u = psi / stance;
        c.force = body_weight * (1.1 * std::sin(std::numbers::pi * u) +
                                 0.25 * std::sin(3.0 * std::numbers::pi * u));
        c.cop_x = 0.02 + 0.20 * u;
        c.cop_y = 0.005 * std::sin(std::numbers::pi * u);
    }
    return c;
}

double frac(double x) {
    return x - std::floor(x);
}

} // namespace

SynthResult synthesize_session(const ChainModel& model, const SynthOptions& o) {
    if (!(o.rate > 0.0) || !(o.duration > 0.0) || !(o.stride_period > 0.0)) {
        throw Error("synth: rate, duration and stride period must be positive");
    }
    if (o.max_burst == 0 || o.max_latency < o.min_latency || o.min_latency < 0.0) {
        throw Error("synth: invalid burst or latency settings");
    }
    for (const auto& [seg, mount] : o.sensors) {
        model.segment_index(seg);
        if (!model.mapping().frame_for(seg)) {
            throw ValidationError(seg, "sensed segment has no frame in the joint mapping");
        }
    }
    const auto left = o.insoles.find("left");
    const auto right = o.insoles.find("right");
    if (left == o.insoles.end() || right == o.insoles.end()) {
        throw Error("synth: both insoles must be configured");
    }
    const std::size_t foot_l = model.segment_index(left->second.body);
    const std::size_t foot_r = model.segment_index(right->second.body);

    const auto n_coords = static_cast<Eigen::Index>(model.coordinate_count());
    const Eigen::VectorXd rest = model.default_pose();
    const auto table = gait_table();
    std::vector<std::pair<Eigen::Index, const Trajectory*>> driven;
    if (o.motion == SynthOptions::Motion::walking) {
        for (const auto& [name, tr] : table) {
            if (auto c = model.find_coordinate(name)) {
                driven.emplace_back(static_cast<Eigen::Index>(*c), &tr);
            }
        }
    }
    const double body_weight = model.total_mass() * model.gravity().norm();
    const Quat heading = rot_z(o.heading);

    SynthResult out;
    Session& s = out.session;
    SynthTruth& truth = out.truth;
    s.reference_names = model.coordinate_names();
    s.sync = SyncRecord{0.0, o.left_tick0, o.right_tick0};

    struct Pending {
        double measured;
        InsoleRecord record;
    };
    std::vector<Pending> records;

    const auto samples = static_cast<std::size_t>(std::llround(o.duration * o.rate));
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) / o.rate;
        const double t_gait = t - o.calibration_s;
        const Value b = o.motion == SynthOptions::Motion::walking
                            ? blend(t, o.calibration_s, o.blend_s)
                            : Value{};

        Eigen::VectorXd q = rest, qd = Eigen::VectorXd::Zero(n_coords),
                        qdd = Eigen::VectorXd::Zero(n_coords);
        for (const auto& [c, tr] : driven) {
            const Value g = evaluate(*tr, t_gait, o.stride_period);
            const double dev = g.q - rest[c];
            q[c] = rest[c] + b.q * dev;
            qd[c] = b.qd * dev + b.q * g.qd;
            qdd[c] = b.qdd * dev + 2.0 * b.qd * g.qd + b.q * g.qdd;
        }

        const auto poses = forward_kinematics(model, q);
        OrientationFrame frame;
        frame.t = t;
        for (const auto& [seg, mount] : o.sensors) {
            const std::size_t idx = model.segment_index(seg);
            const Quat sensor = (heading * poses[idx].rotation * mount).normalized();
            frame.samples.push_back({t, *model.mapping().frame_for(seg), sensor});
        }
        s.orientations.push_back(std::move(frame));

        std::vector<ExternalWrench> wrenches;
        const Contact stand{body_weight / 2.0, 0.10, 0.0};
        for (Side side : {Side::right, Side::left}) {
            const double psi = frac(t_gait / o.stride_period + (side == Side::left ? 0.5 : 0.0));
            const Contact g = gait_contact(psi, body_weight);
            Contact c;
            c.force = (1.0 - b.q) * stand.force + b.q * g.force;
            c.cop_x = (1.0 - b.q) * stand.cop_x + b.q * g.cop_x;
            c.cop_y = (1.0 - b.q) * stand.cop_y + b.q * g.cop_y;
            const InsoleSetup& setup = side == Side::left ? left->second : right->second;
            InsoleSample sample;
            sample.t = t;
            sample.side = side;
            sample.normal_force = c.force;
            sample.cop = Eigen::Vector2d(c.cop_x, c.cop_y);
            const RigidTransform& foot = poses[side == Side::left ? foot_l : foot_r];
            wrenches.push_back(build_wrench(sample, transform_cop(sample, foot, setup.mount),
                                            setup.body));
            InsoleRecord rec;
            rec.side = side;
            rec.tick = (side == Side::left ? o.left_tick0 : o.right_tick0) +
                       static_cast<std::int64_t>(k);
            rec.normal_force = c.force;
            rec.cop_x = c.cop_x;
            rec.cop_y = c.cop_y;
            records.push_back({t, rec});
            (side == Side::left ? truth.force_left : truth.force_right).push_back(c.force);
        }

        Eigen::VectorXd tau = rne(model, q, qd, qdd, wrenches);
        s.refq.push_back({t, std::vector<double>(q.data(), q.data() + q.size())});
        s.reftau.push_back({t, std::vector<double>(tau.data(), tau.data() + tau.size())});
        truth.t.push_back(t);
        truth.q.push_back(std::move(q));
        truth.qd.push_back(std::move(qd));
        truth.qdd.push_back(std::move(qdd));
        truth.tau.push_back(std::move(tau));
    }

    // Transport: variable-size bursts, occasional swaps and repeats.
    std::mt19937_64 rng(o.seed);
    std::uniform_int_distribution<std::size_t> burst_size(1, o.max_burst);
    std::uniform_real_distribution<double> latency(o.min_latency, o.max_latency);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    double last_arrival = 0.0;
    std::vector<InsoleRecord> carry;
    for (std::size_t i = 0; i < records.size();) {
        const std::size_t n = std::min(burst_size(rng), records.size() - i);
        InsoleBurst burst;
        burst.records = std::move(carry);
        carry.clear();
        for (std::size_t j = 0; j < n; ++j) {
            burst.records.push_back(records[i + j].record);
        }
        for (std::size_t j = 1; j < burst.records.size(); ++j) {
            if (coin(rng) < o.swap_probability) {
                std::swap(burst.records[j - 1], burst.records[j]);
            }
        }
        if (coin(rng) < o.duplicate_probability) {
            carry.push_back(burst.records.back());
        }
        const double arrival = std::max(records[i + n - 1].measured + latency(rng), last_arrival);
        // Stamps are written with limited precision; keep them on a 1 us grid.
        burst.arrival_t = std::round(arrival * 1e6) / 1e6;
        last_arrival = burst.arrival_t;
        s.bursts.push_back(std::move(burst));
        i += n;
    }
    if (!carry.empty()) {
        s.bursts.push_back({last_arrival, std::move(carry)});
    }
    return out;
}

} // namespace mskrt
