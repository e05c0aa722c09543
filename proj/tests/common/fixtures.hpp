#pragma once

// Shared builders and reference formulas for unit and acceptance tests.

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Core>

#include "mskrt/model.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) {
    return std::string(MSKRT_TEST_DATA_DIR) + "/" + name;
}

struct Link {
    double mass;
    double length;  // joint to next joint, along x
    double com;     // joint to COM, along x
    double izz;     // about COM
};

/// Models need a free root joint; fixed-base test chains hang from a
/// massless base segment whose six coordinates are held at zero.
inline void add_fixed_base(mskrt::ModelDescription& d) {
    mskrt::SegmentSpec base;
    base.name = "base";
    d.segments.push_back(base);
    mskrt::JointSpec j;
    j.name = "ground_base";
    j.kind = mskrt::JointKind::free;
    j.parent = "ground";
    j.child = "base";
    j.coordinates = {"base_rz", "base_rx", "base_ry", "base_tx", "base_ty", "base_tz"};
    d.joints.push_back(j);
    for (const auto& c : j.coordinates) d.coordinates.push_back(mskrt::CoordinateSpec{c});
}

inline constexpr Eigen::Index kBaseDofs = 6;

/// Full coordinate vector for a fixed-base chain from the chain's own values.
inline Eigen::VectorXd with_base(const Eigen::VectorXd& chain) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(kBaseDofs + chain.size());
    full.tail(chain.size()) = chain;
    return full;
}

/// Planar serial chain of revolute z joints, links along +x at q = 0,
/// gravity along -y.
inline mskrt::ChainModel planar_chain(const std::vector<Link>& links, double g = 9.81) {
    mskrt::ModelDescription d;
    d.name = "planar";
    d.gravity = mskrt::Vec3(0.0, -g, 0.0);
    add_fixed_base(d);
    std::string parent = "base";
    for (std::size_t i = 0; i < links.size(); ++i) {
        const std::string seg = "link" + std::to_string(i + 1);
        mskrt::SegmentSpec s;
        s.name = seg;
        s.mass = links[i].mass;
        s.com = mskrt::Vec3(links[i].com, 0.0, 0.0);
        // Out-of-plane inertia must not leak into planar torques.
        s.inertia = mskrt::Vec3(0.3 * links[i].izz + 0.01, 0.7 * links[i].izz + 0.02, links[i].izz)
                        .asDiagonal();
        d.segments.push_back(s);

        mskrt::JointSpec j;
        j.name = "j" + std::to_string(i + 1);
        j.kind = mskrt::JointKind::revolute;
        j.axis = mskrt::Vec3::UnitZ();
        j.parent = parent;
        j.child = seg;
        if (i > 0) j.parent_offset.translation = mskrt::Vec3(links[i - 1].length, 0.0, 0.0);
        j.coordinates = {"q" + std::to_string(i + 1)};
        d.joints.push_back(j);

        mskrt::CoordinateSpec c;
        c.name = j.coordinates[0];
        d.coordinates.push_back(c);
        parent = seg;
    }
    return mskrt::ChainModel(std::move(d));
}

/// Point mass on a massless rod, hanging along -y at theta = 0; revolute z,
/// gravity along -y.
inline mskrt::ChainModel hanging_pendulum(double mass, double length, double g) {
    mskrt::ModelDescription d;
    d.name = "pendulum";
    d.gravity = mskrt::Vec3(0.0, -g, 0.0);
    add_fixed_base(d);
    mskrt::SegmentSpec bob;
    bob.name = "bob";
    bob.mass = mass;
    bob.com = mskrt::Vec3(0.0, -length, 0.0);
    d.segments.push_back(bob);
    mskrt::JointSpec j;
    j.name = "pivot";
    j.parent = "base";
    j.child = "bob";
    j.coordinates = {"theta"};
    d.joints.push_back(j);
    d.coordinates.push_back(mskrt::CoordinateSpec{"theta"});
    return mskrt::ChainModel(std::move(d));
}

/// Euler-Lagrange torques of a 1- or 2-link planar chain, written out from
/// the kinetic and potential energy (standard two-link manipulator form).
inline Eigen::VectorXd lagrange_torques(const std::vector<Link>& L, const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& qd, const Eigen::VectorXd& qdd,
                                        double g = 9.81) {
    if (L.size() == 1) {
        const double I = L[0].izz + L[0].mass * L[0].com * L[0].com;
        Eigen::VectorXd tau(1);
        tau[0] = I * qdd[0] + L[0].mass * g * L[0].com * std::cos(q[0]);
        return tau;
    }
    const double m1 = L[0].mass, m2 = L[1].mass, l1 = L[0].length, c1 = L[0].com, c2 = L[1].com;
    const double I1 = L[0].izz, I2 = L[1].izz;
    const double cq2 = std::cos(q[1]), sq2 = std::sin(q[1]);
    const double M11 = I1 + I2 + m1 * c1 * c1 + m2 * (l1 * l1 + c2 * c2 + 2.0 * l1 * c2 * cq2);
    const double M12 = I2 + m2 * (c2 * c2 + l1 * c2 * cq2);
    const double M22 = I2 + m2 * c2 * c2;
    const double h = m2 * l1 * c2 * sq2;
    const double G1 = (m1 * c1 + m2 * l1) * g * std::cos(q[0]) + m2 * c2 * g * std::cos(q[0] + q[1]);
    const double G2 = m2 * c2 * g * std::cos(q[0] + q[1]);
    Eigen::VectorXd tau(2);
    tau[0] = M11 * qdd[0] + M12 * qdd[1] - h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]) + G1;
    tau[1] = M12 * qdd[0] + M22 * qdd[1] + h * qd[0] * qd[0] + G2;
    return tau;
}

} // namespace fixtures
