#include "mskrt/geometry.hpp"

#include <cmath>
#include <numbers>

namespace mskrt {

Eigen::Matrix4d RigidTransform::matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation.toRotationMatrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
}

Quat axis_angle(const Vec3& unit_axis, double angle) {
    return Quat(Eigen::AngleAxisd(angle, unit_axis));
}

Quat rot_x(double angle) { return axis_angle(Vec3::UnitX(), angle); }
Quat rot_y(double angle) { return axis_angle(Vec3::UnitY(), angle); }
Quat rot_z(double angle) { return axis_angle(Vec3::UnitZ(), angle); }

Quat euler_zxy(double a, double b, double c) {
    return (rot_z(a) * rot_x(b) * rot_y(c)).normalized();
}

Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return s;
}

Vec3 so3_log(const Mat3& r) {
    // Quaternion route is well conditioned near both 0 and pi.
    Quat q(r);
    q.normalize();
    if (q.w() < 0.0) {
        q.coeffs() *= -1.0;
    }
    const Vec3 v = q.vec();
    const double s = v.norm();
    if (s < 1e-12) {
        return 2.0 * v;
    }
    const double angle = 2.0 * std::atan2(s, q.w());
    return v * (angle / s);
}

Mat3 so3_exp(const Vec3& phi) {
    const double angle = phi.norm();
    if (angle < 1e-15) {
        return Mat3::Identity() + skew(phi);
    }
    return Eigen::AngleAxisd(angle, phi / angle).toRotationMatrix();
}

Mat3 so3_right_jacobian_inverse(const Vec3& phi) {
    const double angle = phi.norm();
    const Mat3 k = skew(phi);
    if (angle < 1e-6) {
        return Mat3::Identity() + 0.5 * k + (1.0 / 12.0) * k * k;
    }
    const double coeff = 1.0 / (angle * angle) -
                         (1.0 + std::cos(angle)) / (2.0 * angle * std::sin(angle));
    return Mat3::Identity() + 0.5 * k + coeff * k * k;
}

double geodesic_distance(const Quat& a, const Quat& b) {
    // atan2 form stays accurate for tiny angles where acos would not.
    const Quat delta = a.normalized().conjugate() * b.normalized();
    return 2.0 * std::atan2(delta.vec().norm(), std::abs(delta.w()));
}

double yaw_of(const Quat& q) {
    Vec3 axis = q * Vec3::UnitX();
    if (std::hypot(axis.x(), axis.y()) < 1e-6) {
        axis = q * Vec3::UnitY();
        return std::atan2(axis.y(), axis.x()) - std::numbers::pi / 2.0;
    }
    return std::atan2(axis.y(), axis.x());
}

} // namespace mskrt
