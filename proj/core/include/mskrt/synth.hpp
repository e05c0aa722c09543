#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mskrt/geometry.hpp"
#include "mskrt/model.hpp"
#include "mskrt/session.hpp"

namespace mskrt {

struct InsoleSetup {
    std::string body;        // foot segment carrying the insole
    RigidTransform mount;    // insole frame expressed in the foot frame
};

/// Default insole placement on the demo model's heel segment: insole x along
/// the foot's forward axis, insole y to the left, insole z up.
InsoleSetup default_insole(const std::string& body);

struct SynthOptions {
    enum class Motion { standing, walking };
    Motion motion = Motion::walking;
    double duration = 10.0;       // s
    double rate = 100.0;          // Hz, orientation and insole sampling
    double calibration_s = 0.5;   // initial still stance at the default pose
    double blend_s = 0.6;         // stance -> gait transition
    double stride_period = 1.1;   // s
    double heading = 0.5235987755982988;  // rad, sensor inertial frame yaw vs model ground

    /// Sensed segments and the mount rotation (sensor frame in segment frame).
    std::map<std::string, Quat> sensors;
    std::map<std::string, InsoleSetup> insoles;  // keyed "left"/"right"

    std::int64_t left_tick0 = 1000;
    std::int64_t right_tick0 = 52000;
    std::size_t max_burst = 6;              // records per burst
    double min_latency = 0.004;             // s, transport latency range
    double max_latency = 0.030;
    double swap_probability = 0.08;         // adjacent records swapped within a burst
    double duplicate_probability = 0.03;    // record repeated in the next burst
    std::uint64_t seed = 7;
};

/// Sensor and insole setup used by the bundled sessions for the demo model.
SynthOptions demo_synth_options(SynthOptions::Motion motion);

struct SynthTruth {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> q, qd, qdd, tau;
    std::vector<double> force_left, force_right;  // N
};

struct SynthResult {
    Session session;
    SynthTruth truth;
};

/// Scripted kinematics (still stance, then periodic gait with analytic
/// derivatives), sensor orientations Rz(heading) * R_segment * mount, bursty
/// reordered insole records, and ground-truth torques from RNE with the true
/// vertical ground reactions.
SynthResult synthesize_session(const ChainModel& model, const SynthOptions& options);

} // namespace mskrt
