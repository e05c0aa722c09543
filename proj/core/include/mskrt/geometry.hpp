#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mskrt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform mapping points of a child frame into its parent frame:
/// p_parent = rotation * p_child + translation.
struct RigidTransform {
    Quat rotation = Quat::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    static RigidTransform from_rotation(const Quat& q) { return {q, Vec3::Zero()}; }
    static RigidTransform from_translation(const Vec3& t) { return {Quat::Identity(), t}; }

    RigidTransform operator*(const RigidTransform& rhs) const {
        return {(rotation * rhs.rotation).normalized(), rotation * rhs.translation + translation};
    }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    RigidTransform inverse() const {
        const Quat inv = rotation.conjugate();
        return {inv, -(inv * translation)};
    }

    Eigen::Matrix4d matrix() const;
};

Quat axis_angle(const Vec3& unit_axis, double angle);
Quat rot_x(double angle);
Quat rot_y(double angle);
Quat rot_z(double angle);

/// Intrinsic Z-X-Y Euler rotation Rz(a) * Rx(b) * Ry(c).
Quat euler_zxy(double a, double b, double c);

/// SO(3) logarithm as a rotation vector (angle * axis), angle in [0, pi].
Vec3 so3_log(const Mat3& r);
Mat3 so3_exp(const Vec3& phi);

/// Inverse of the right Jacobian of SO(3): d log(R exp(xi)) = Jr^-1(log R) xi.
Mat3 so3_right_jacobian_inverse(const Vec3& phi);

/// Geodesic angle between two rotations, rad.
double geodesic_distance(const Quat& a, const Quat& b);

/// Heading (yaw about +z) of a rotation, taken from the horizontal projection
/// of its rotated x axis (falls back to the y axis near vertical).
double yaw_of(const Quat& q);

Mat3 skew(const Vec3& v);

} // namespace mskrt
