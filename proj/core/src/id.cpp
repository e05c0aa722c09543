#include "mskrt/id.hpp"

#include <vector>

#include "mskrt/errors.hpp"

namespace mskrt {

Vec3 transform_cop(const InsoleSample& sample, const RigidTransform& foot_tf,
                   const RigidTransform& insole_mount) {
    Vec3 p = (foot_tf * insole_mount).apply(Vec3(sample.cop.x(), sample.cop.y(), 0.0));
    p.z() = 0.0;
    return p;
}

ExternalWrench build_wrench(const InsoleSample& sample, const Vec3& p_global, std::string body,
                            double activation_threshold) {
    ExternalWrench w;
    w.t = sample.t;
    w.body = std::move(body);
    w.point = p_global;
    w.active = sample.normal_force >= activation_threshold;
    if (w.active) {
        w.force = Vec3(0.0, 0.0, sample.normal_force);
    }
    return w;
}

Eigen::VectorXd rne(const ChainModel& model, const Eigen::Ref<const Eigen::VectorXd>& q,
                    const Eigen::Ref<const Eigen::VectorXd>& qd,
                    const Eigen::Ref<const Eigen::VectorXd>& qdd,
                    std::span<const ExternalWrench> wrenches) {
    const auto n = static_cast<Eigen::Index>(model.coordinate_count());
    if (q.size() != n || qd.size() != n || qdd.size() != n) {
        throw DimensionError("rne: q, qd, qdd must each have " + std::to_string(n) + " entries");
    }
    if (!q.allFinite() || !qd.allFinite() || !qdd.allFinite()) {
        throw Error("rne: non-finite joint state");
    }

    const KinematicState ks = model.kinematic_state(q);
    const auto& steps = model.steps();
    const std::size_t m = steps.size();

    std::vector<Vec3> w(m), dw(m), a(m);
    const Vec3 a_ground = -model.gravity();
    for (std::size_t k = 0; k < m; ++k) {
        const KinematicStep& s = steps[k];
        const Vec3& z = ks.step_axes[k];
        const double v = qd[static_cast<Eigen::Index>(s.coordinate)];
        const double acc = qdd[static_cast<Eigen::Index>(s.coordinate)];
        Vec3 wp = Vec3::Zero(), dwp = Vec3::Zero(), ap = a_ground;
        Vec3 r = Vec3::Zero();
        if (s.parent >= 0) {
            const auto p = static_cast<std::size_t>(s.parent);
            wp = w[p];
            dwp = dw[p];
            ap = a[p];
            r = ks.step_origins[k] - ks.step_origins[p];
        }
        const Vec3 a_point = ap + dwp.cross(r) + wp.cross(wp.cross(r));
        if (s.kind == KinematicStep::Kind::rotation) {
            w[k] = wp + z * v;
            dw[k] = dwp + z * acc + wp.cross(z * v);
            a[k] = a_point;
        } else {
            w[k] = wp;
            dw[k] = dwp;
            a[k] = a_point + z * acc + 2.0 * wp.cross(z * v);
        }
    }

    std::vector<std::vector<const ExternalWrench*>> applied(model.segment_count());
    for (const ExternalWrench& ew : wrenches) {
        const auto seg = model.find_segment(ew.body);
        if (!seg) {
            throw ValidationError(ew.body, "external wrench on unknown body");
        }
        if (ew.active) {
            applied[*seg].push_back(&ew);
        }
    }

    std::vector<Vec3> f(m, Vec3::Zero()), nm(m, Vec3::Zero());
    Eigen::VectorXd tau(n);
    for (std::size_t k = m; k-- > 0;) {
        const KinematicStep& s = steps[k];
        const Vec3& o = ks.step_origins[k];
        if (s.segment >= 0) {
            const auto seg = static_cast<std::size_t>(s.segment);
            const SegmentSpec& spec = model.segments()[seg];
            const RigidTransform& pose = ks.segments[seg];
            const Vec3 c = pose.apply(spec.com);
            const Mat3 rot = pose.rotation.toRotationMatrix();
            const Mat3 inertia = rot * spec.inertia * rot.transpose();
            const Vec3 rc = c - o;
            const Vec3 ac = a[k] + dw[k].cross(rc) + w[k].cross(w[k].cross(rc));
            const Vec3 force = spec.mass * ac;
            const Vec3 moment = inertia * dw[k] + w[k].cross(inertia * w[k]);
            f[k] += force;
            nm[k] += moment + rc.cross(force);
            for (const ExternalWrench* ew : applied[seg]) {
                f[k] -= ew->force;
                nm[k] -= (ew->point - o).cross(ew->force);
            }
        }
        const double value = s.kind == KinematicStep::Kind::rotation
                                 ? ks.step_axes[k].dot(nm[k])
                                 : ks.step_axes[k].dot(f[k]);
        tau[static_cast<Eigen::Index>(s.coordinate)] = value;
        if (s.parent >= 0) {
            const auto p = static_cast<std::size_t>(s.parent);
            f[p] += f[k];
            nm[p] += nm[k] + (o - ks.step_origins[p]).cross(f[k]);
        }
    }
    return tau;
}

TorqueState inverse_dynamics(const ChainModel& model, const JointState& js,
                             std::span<const ExternalWrench> wrenches, const Clock* clock) {
    TorqueState out;
    out.t = js.t;
    out.state = js;
    out.events = js.events;
    if (clock != nullptr) {
        out.events = record_event(std::move(out.events), EventId::before_id, clock->now());
    }
    out.tau = rne(model, js.q, js.qd, js.qdd, wrenches);
    if (clock != nullptr) {
        out.events = record_event(std::move(out.events), EventId::torques_calculated, clock->now());
    }
    out.state.events = out.events;
    return out;
}

} // namespace mskrt
