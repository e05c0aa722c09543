#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mskrt/calib.hpp"
#include "mskrt/filter.hpp"
#include "mskrt/model.hpp"
#include "mskrt/samples.hpp"
#include "mskrt/telemetry.hpp"

namespace mskrt {

struct JointState {
    double t = 0.0;
    Eigen::VectorXd q;
    Eigen::VectorXd qd;
    Eigen::VectorXd qdd;
    EventLog events;
};

struct TransformSet {
    double t = 0.0;
    std::map<std::string, RigidTransform> transforms;  // external frame name -> ground pose
};

struct IkOptions {
    /// Per sensor frame weight; frames not listed weigh 1.
    std::map<std::string, double> weights;
    double initial_damping = 1e-6;
    double step_tolerance = 1e-8;  // rad
    int max_iterations = 50;
};

struct IkResult {
    Eigen::VectorXd q;
    int iterations = 0;  // accepted steps
    bool converged = false;
    double cost = 0.0;   // sum w * angle^2
    double max_residual = 0.0;  // rad, largest per-sensor geodesic error
};

/// Target rotation for one segment, already expressed in the ground frame.
struct SegmentTarget {
    std::size_t segment = 0;
    Quat rotation = Quat::Identity();
    double weight = 1.0;
};

/// Damped Gauss-Newton (Levenberg) on sum_k w_k |log(R_hat_k R_k(q)^T)|^2,
/// started at q_prev. Translational coordinates stay at their q_prev values.
IkResult solve_orientations(const ChainModel& model, const std::vector<SegmentTarget>& targets,
                            const Eigen::VectorXd& q_prev, const IkOptions& options = {});

/// Applies the calibration to each observed sensor and solves. Throws
/// ValidationError when a calibrated sensor is missing from the frame or the
/// frame carries an uncalibrated sensor.
IkResult solve_frame(const ChainModel& model, const CalibrationSet& calib,
                     const OrientationFrame& obs, const Eigen::VectorXd& q_prev,
                     const IkOptions& options = {});

/// Stateful IK stage: warm-started solves plus the spline filter. Each pushed
/// frame yields the JointState at the filter's delayed evaluation point once
/// the window is full, with event 0 stamped at `now`.
class Tracker {
public:
    Tracker(const ChainModel& model, CalibrationSet calib, SplineWindow window,
            IkOptions options = {});
    Tracker(const ChainModel& model, CalibrationSet calib, SplineWindow window,
            IkOptions options, Eigen::VectorXd initial_q);

    std::optional<JointState> push(const OrientationFrame& frame, double now);

    const IkResult& last_result() const { return last_; }
    std::size_t frames() const { return frames_; }
    std::size_t unconverged() const { return unconverged_; }
    int max_iterations_seen() const { return max_iterations_seen_; }

private:
    const ChainModel& model_;
    CalibrationSet calib_;
    IkOptions options_;
    SlidingSplineFilter filter_;
    Eigen::VectorXd q_prev_;
    IkResult last_;
    std::size_t frames_ = 0;
    std::size_t unconverged_ = 0;
    int max_iterations_seen_ = 0;
};

/// Ground-frame pose of every segment under its external frame name, stamped
/// with js.t. Throws ValidationError for a segment missing from a non-empty
/// mapping; an empty mapping publishes segment names unchanged.
TransformSet broadcast_transforms(const ChainModel& model, const JointState& js);

} // namespace mskrt
