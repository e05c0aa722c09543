#pragma once

#include <span>
#include <string>

#include <Eigen/Core>

#include "mskrt/geometry.hpp"
#include "mskrt/ik.hpp"
#include "mskrt/model.hpp"
#include "mskrt/samples.hpp"
#include "mskrt/telemetry.hpp"

namespace mskrt {

/// Ground-frame force applied at a ground-frame point on a body.
struct ExternalWrench {
    double t = 0.0;
    std::string body;
    Vec3 force = Vec3::Zero();
    Vec3 point = Vec3::Zero();
    bool active = false;
};

struct TorqueState {
    double t = 0.0;
    Eigen::VectorXd tau;  // N m, or N for translational coordinates
    JointState state;
    EventLog events;
};

/// COP in the ground frame: foot_tf * mount * (cop_x, cop_y, 0), projected
/// onto the ground plane (z = 0).
Vec3 transform_cop(const InsoleSample& sample, const RigidTransform& foot_tf,
                   const RigidTransform& insole_mount);

/// Vertical force (0, 0, F) at p when F >= threshold; otherwise an inactive
/// wrench with zero force.
ExternalWrench build_wrench(const InsoleSample& sample, const Vec3& p_global, std::string body,
                            double activation_threshold = 10.0);

/// Recursive Newton-Euler over the model tree. Inactive wrenches are ignored.
/// Throws DimensionError on size mismatch and ValidationError for a wrench on
/// an unknown body.
Eigen::VectorXd rne(const ChainModel& model, const Eigen::Ref<const Eigen::VectorXd>& q,
                    const Eigen::Ref<const Eigen::VectorXd>& qd,
                    const Eigen::Ref<const Eigen::VectorXd>& qdd,
                    std::span<const ExternalWrench> wrenches = {});

/// Torques for a matched joint state. When a clock is supplied, events 5 and 6
/// are appended to the joint state's log around the computation.
TorqueState inverse_dynamics(const ChainModel& model, const JointState& js,
                             std::span<const ExternalWrench> wrenches,
                             const Clock* clock = nullptr);

} // namespace mskrt
