#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Cholesky>

#include "fixtures.hpp"
#include "mskrt/errors.hpp"
#include "mskrt/id.hpp"

using namespace mskrt;

namespace {

const ChainModel& lower_body() {
    static const ChainModel m = load_model(fixtures::data_path("lower_body.json"));
    return m;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale) {
    std::uniform_real_distribution<double> U(-scale, scale);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = U(rng);
    return v;
}

} // namespace

TEST_CASE("hanging pendulum torque") {
    const double m = 2.0, l = 0.8, g = 9.81;
    const ChainModel model = fixtures::hanging_pendulum(m, l, g);
    for (double theta : {-1.0, 0.0, 0.4, 2.0}) {
        for (double acc : {0.0, 3.0}) {
            Eigen::VectorXd q = Eigen::VectorXd::Zero(7), qd = q, qdd = q;
            q[6] = theta;
            qd[6] = 1.7;  // centripetal load sits on the pivot, not the joint
            qdd[6] = acc;
            const Eigen::VectorXd tau = rne(model, q, qd, qdd);
            CHECK(tau[6] == doctest::Approx(m * g * l * std::sin(theta) + m * l * l * acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("a wrench at the COM that cancels gravity leaves no torque") {
    const double m = 2.0, l = 0.8, g = 9.81;
    const ChainModel model = fixtures::hanging_pendulum(m, l, g);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(7);
    q[6] = 0.6;
    const Vec3 com = forward_kinematics(model, q)[model.segment_index("bob")].apply(Vec3(0.0, -l, 0.0));
    const ExternalWrench lift{0.0, "bob", Vec3(0.0, m * g, 0.0), com, true};
    const Eigen::VectorXd tau = rne(model, q, Eigen::VectorXd::Zero(7), Eigen::VectorXd::Zero(7),
                                    std::span(&lift, 1));
    CHECK(tau.norm() < 1e-12);

    ExternalWrench off = lift;
    off.active = false;
    const Eigen::VectorXd ignored = rne(model, q, Eigen::VectorXd::Zero(7), Eigen::VectorXd::Zero(7),
                                        std::span(&off, 1));
    CHECK(ignored[6] == doctest::Approx(m * g * l * std::sin(0.6)));
}

TEST_CASE("torque is affine in acceleration with a symmetric positive mass matrix") {
    const ChainModel& m = lower_body();
    std::mt19937_64 rng(91);
    const Eigen::Index n = static_cast<Eigen::Index>(m.coordinate_count());
    const Eigen::VectorXd q = m.default_pose() + random_vector(rng, n, 0.4);
    const Eigen::VectorXd qd = random_vector(rng, n, 1.0);
    const Eigen::VectorXd bias = rne(m, q, qd, Eigen::VectorXd::Zero(n));
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        M.col(j) = rne(m, q, qd, Eigen::VectorXd::Unit(n, j)) - bias;
    }
    CHECK((M - M.transpose()).norm() < 1e-10 * M.norm());
    CHECK(M.llt().info() == Eigen::Success);
    const Eigen::VectorXd a = random_vector(rng, n, 2.0);
    CHECK((rne(m, q, qd, a) - (M * a + bias)).norm() < 1e-10 * (1.0 + bias.norm()));
}

TEST_CASE("external wrenches superpose") {
    const ChainModel& m = lower_body();
    std::mt19937_64 rng(97);
    const Eigen::Index n = static_cast<Eigen::Index>(m.coordinate_count());
    const Eigen::VectorXd q = m.default_pose() + random_vector(rng, n, 0.3);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    const ExternalWrench wl{0.0, "calcn_l", Vec3(10.0, -5.0, 400.0), Vec3(0.1, 0.1, 0.0), true};
    const ExternalWrench wr{0.0, "calcn_r", Vec3(-3.0, 2.0, 300.0), Vec3(0.3, -0.1, 0.0), true};
    const ExternalWrench both[] = {wl, wr};
    const Eigen::VectorXd t0 = rne(m, q, z, z);
    const Eigen::VectorXd tl = rne(m, q, z, z, std::span(&wl, 1)) - t0;
    const Eigen::VectorXd tr = rne(m, q, z, z, std::span(&wr, 1)) - t0;
    CHECK((rne(m, q, z, z, both) - t0 - tl - tr).norm() < 1e-9);

    // the free root's translations carry the negated resultant, expressed in
    // the root joint's offset frame
    const Eigen::Index tx = static_cast<Eigen::Index>(m.coordinate_index("pelvis_tx"));
    const Mat3 axes = m.joints()[m.joint_order().front()].parent_offset.rotation.toRotationMatrix();
    CHECK((tl.segment(tx, 3) + axes.transpose() * wl.force).norm() < 1e-9);
}

TEST_CASE("rne rejects bad input") {
    const ChainModel model = fixtures::hanging_pendulum(1.0, 1.0, 9.81);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(7);
    CHECK_THROWS_AS(rne(model, Eigen::VectorXd::Zero(3), z, z), DimensionError);
    const ExternalWrench w{0.0, "ghost", Vec3::UnitY(), Vec3::Zero(), true};
    CHECK_THROWS_AS(rne(model, z, z, z, std::span(&w, 1)), ValidationError);
}

TEST_CASE("centre of pressure lands on the ground plane") {
    const RigidTransform foot{rot_z(0.5), Vec3(1.0, 2.0, 0.05)};
    const RigidTransform mount{rot_x(-std::numbers::pi / 2), Vec3(0.0, -0.01, 0.0)};
    InsoleSample s;
    s.cop = Eigen::Vector2d(0.1, 0.02);
    const Vec3 p = transform_cop(s, foot, mount);
    const Vec3 expected = foot.apply(mount.apply(Vec3(0.1, 0.02, 0.0)));
    CHECK(p.z() == 0.0);
    CHECK(p.x() == doctest::Approx(expected.x()));
    CHECK(p.y() == doctest::Approx(expected.y()));
}

TEST_CASE("wrench activation threshold") {
    InsoleSample s;
    s.t = 0.3;
    s.normal_force = 10.0;
    const auto on = build_wrench(s, Vec3(1.0, 2.0, 0.0), "calcn_l");
    CHECK(on.active);
    CHECK(on.force == Vec3(0.0, 0.0, 10.0));
    CHECK(on.t == 0.3);
    s.normal_force = 9.99;
    const auto off = build_wrench(s, Vec3::Zero(), "calcn_l");
    CHECK_FALSE(off.active);
    CHECK(off.force.isZero());
}

TEST_CASE("inverse dynamics stamps events around the computation") {
    const ChainModel model = fixtures::hanging_pendulum(1.0, 0.5, 9.81);
    JointState js;
    js.t = 0.4;
    js.q = Eigen::VectorXd::Zero(7);
    js.q[6] = 0.3;
    js.qd = js.qdd = Eigen::VectorXd::Zero(7);
    js.events = record_event(js.events, EventId::joint_angles_produced, 0.0);
    VirtualClock clock;
    clock.set(0.7);
    const TorqueState ts = inverse_dynamics(model, js, {}, &clock);
    CHECK(ts.t == 0.4);
    CHECK(ts.tau[6] == doctest::Approx(9.81 * 0.5 * std::sin(0.3)));
    CHECK(ts.events.time_of(EventId::before_id) == std::optional<double>(0.7));
    CHECK(ts.events.time_of(EventId::torques_calculated) == std::optional<double>(0.7));
    CHECK(inverse_dynamics(model, js, {}).events.size() == 1);
}
