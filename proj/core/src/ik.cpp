#include "mskrt/ik.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "mskrt/errors.hpp"

namespace mskrt {

namespace {

struct Residuals {
    std::vector<Vec3> errors;  // log(R_hat R^T), world frame
    double cost = 0.0;
    double max_angle = 0.0;
};

Residuals residuals(const std::vector<SegmentTarget>& targets,
                    const std::vector<RigidTransform>& poses) {
    Residuals r;
    r.errors.reserve(targets.size());
    for (const SegmentTarget& t : targets) {
        const Mat3 rel = (t.rotation * poses[t.segment].rotation.conjugate()).toRotationMatrix();
        const Vec3 e = so3_log(rel);
        r.errors.push_back(e);
        r.cost += t.weight * e.squaredNorm();
        r.max_angle = std::max(r.max_angle, e.norm());
    }
    return r;
}

} // namespace

IkResult solve_orientations(const ChainModel& model, const std::vector<SegmentTarget>& targets,
                            const Eigen::VectorXd& q_prev, const IkOptions& options) {
    const auto n = static_cast<Eigen::Index>(model.coordinate_count());
    if (q_prev.size() != n) {
        throw DimensionError("IK start vector has " + std::to_string(q_prev.size()) +
                             " entries, model has " + std::to_string(n) + " coordinates");
    }
    if (!q_prev.allFinite()) {
        throw Error("IK start vector is not finite");
    }
    for (const SegmentTarget& t : targets) {
        if (t.segment >= model.segment_count()) {
            throw ValidationError("IK", "target segment index out of range");
        }
    }

    IkResult result;
    result.q = q_prev;
    KinematicState state = model.kinematic_state(result.q);
    Residuals res = residuals(targets, state.segments);
    double lambda = options.initial_damping;
    const auto& steps = model.steps();

    Eigen::MatrixXd h(n, n);
    Eigen::VectorXd g(n);
    for (int iter = 0; iter < options.max_iterations * 4; ++iter) {
        if (result.iterations >= options.max_iterations) {
            break;
        }
        h.setZero();
        g.setZero();
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const Mat3 jr_inv = so3_right_jacobian_inverse(res.errors[k]);
            const auto& path = model.rotation_path(targets[k].segment);
            Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, static_cast<Eigen::Index>(path.size()));
            for (std::size_t c = 0; c < path.size(); ++c) {
                jac.col(static_cast<Eigen::Index>(c)) = -jr_inv * state.step_axes[path[c]];
            }
            const double w = targets[k].weight;
            for (std::size_t a = 0; a < path.size(); ++a) {
                const auto ia = static_cast<Eigen::Index>(steps[path[a]].coordinate);
                const auto ca = jac.col(static_cast<Eigen::Index>(a));
                g(ia) += w * ca.dot(res.errors[k]);
                for (std::size_t b = 0; b < path.size(); ++b) {
                    const auto ib = static_cast<Eigen::Index>(steps[path[b]].coordinate);
                    h(ia, ib) += w * ca.dot(jac.col(static_cast<Eigen::Index>(b)));
                }
            }
        }
        Eigen::MatrixXd damped = h;
        damped.diagonal().array() += lambda;
        const Eigen::VectorXd delta = damped.ldlt().solve(-g);
        if (!delta.allFinite()) {
            lambda *= 10.0;
            continue;
        }
        if (delta.norm() < options.step_tolerance) {
            result.converged = true;
            break;
        }
        const Eigen::VectorXd trial = result.q + delta;
        KinematicState trial_state = model.kinematic_state(trial);
        Residuals trial_res = residuals(targets, trial_state.segments);
        if (trial_res.cost <= res.cost) {
            result.q = trial;
            state = std::move(trial_state);
            res = std::move(trial_res);
            lambda = std::max(lambda / 10.0, 1e-12);
            ++result.iterations;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) {
                break;
            }
        }
    }
    result.cost = res.cost;
    result.max_residual = res.max_angle;
    return result;
}

IkResult solve_frame(const ChainModel& model, const CalibrationSet& calib,
                     const OrientationFrame& obs, const Eigen::VectorXd& q_prev,
                     const IkOptions& options) {
    std::vector<SegmentTarget> targets;
    targets.reserve(calib.sensors.size());
    for (const auto& [frame, sc] : calib.sensors) {
        const OrientationSample* sample = nullptr;
        for (const auto& s : obs.samples) {
            if (s.frame == frame) {
                sample = &s;
                break;
            }
        }
        if (sample == nullptr) {
            throw ValidationError(frame, "missing sensor in frame at t=" + std::to_string(obs.t));
        }
        SegmentTarget t;
        t.segment = model.segment_index(sc.segment);
        t.rotation = calib.apply(frame, sample->quat);
        if (auto it = options.weights.find(frame); it != options.weights.end()) {
            t.weight = it->second;
        }
        targets.push_back(t);
    }
    for (const auto& s : obs.samples) {
        if (!calib.has(s.frame)) {
            throw ValidationError(s.frame, "sensor frame is not calibrated");
        }
    }
    return solve_orientations(model, targets, q_prev, options);
}

Tracker::Tracker(const ChainModel& model, CalibrationSet calib, SplineWindow window,
                 IkOptions options)
    : Tracker(model, std::move(calib), window, std::move(options), model.default_pose()) {}

Tracker::Tracker(const ChainModel& model, CalibrationSet calib, SplineWindow window,
                 IkOptions options, Eigen::VectorXd initial_q)
    : model_(model),
      calib_(std::move(calib)),
      options_(std::move(options)),
      filter_(window, model.coordinate_count()),
      q_prev_(std::move(initial_q)) {
    if (static_cast<std::size_t>(q_prev_.size()) != model.coordinate_count()) {
        throw DimensionError("tracker initial pose has the wrong length");
    }
}

std::optional<JointState> Tracker::push(const OrientationFrame& frame, double now) {
    last_ = solve_frame(model_, calib_, frame, q_prev_, options_);
    ++frames_;
    if (!last_.converged) {
        ++unconverged_;
    }
    max_iterations_seen_ = std::max(max_iterations_seen_, last_.iterations);
    q_prev_ = last_.q;
    auto out = filter_.push(frame.t, last_.q);
    if (!out) {
        return std::nullopt;
    }
    JointState js;
    js.t = out->t;
    js.q = std::move(out->value);
    js.qd = std::move(out->d1);
    js.qdd = std::move(out->d2);
    js.events = record_event(EventLog{}, EventId::joint_angles_produced, now);
    return js;
}

TransformSet broadcast_transforms(const ChainModel& model, const JointState& js) {
    if (static_cast<std::size_t>(js.q.size()) != model.coordinate_count()) {
        throw DimensionError("joint state length differs from the model coordinate count");
    }
    const auto poses = forward_kinematics(model, js.q);
    TransformSet out;
    out.t = js.t;
    const bool identity = model.mapping().pairs().empty();
    for (std::size_t s = 0; s < poses.size(); ++s) {
        const std::string& name = model.segments()[s].name;
        if (identity) {
            out.transforms.emplace(name, poses[s]);
            continue;
        }
        const auto frame = model.mapping().frame_for(name);
        if (!frame) {
            throw ValidationError(name, "segment has no external frame in the joint mapping");
        }
        out.transforms.emplace(*frame, poses[s]);
    }
    return out;
}

} // namespace mskrt
