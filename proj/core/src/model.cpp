#include "mskrt/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "mskrt/errors.hpp"

namespace mskrt {

int dof_count(JointKind kind) {
    switch (kind) {
    case JointKind::revolute: return 1;
    case JointKind::ball: return 3;
    case JointKind::free: return 6;
    }
    return 0;
}

std::string_view to_string(JointKind kind) {
    switch (kind) {
    case JointKind::revolute: return "revolute";
    case JointKind::ball: return "ball";
    case JointKind::free: return "free";
    }
    return "?";
}

double Polynomial::evaluate(const Eigen::Ref<const Eigen::VectorXd>& q) const {
    double sum = 0.0;
    for (const Term& term : terms) {
        double value = term.coeff;
        for (const auto& [index, power] : term.powers) {
            for (int k = 0; k < power; ++k) {
                value *= q[static_cast<Eigen::Index>(index)];
            }
        }
        sum += value;
    }
    return sum;
}

Polynomial Polynomial::derivative(std::size_t coordinate) const {
    Polynomial out;
    for (const Term& term : terms) {
        auto it = std::find_if(term.powers.begin(), term.powers.end(),
                               [&](const auto& p) { return p.first == coordinate; });
        if (it == term.powers.end() || it->second == 0) {
            continue;
        }
        Term d = term;
        auto dit = d.powers.begin() + (it - term.powers.begin());
        d.coeff *= dit->second;
        dit->second -= 1;
        if (dit->second == 0) {
            d.powers.erase(dit);
        }
        out.terms.push_back(std::move(d));
    }
    return out;
}

JointMapping::JointMapping(std::vector<FrameMapping> pairs) : pairs_(std::move(pairs)) {}

std::optional<std::string> JointMapping::segment_for(std::string_view frame) const {
    for (const auto& p : pairs_) {
        if (p.frame == frame) {
            return p.segment;
        }
    }
    return std::nullopt;
}

std::optional<std::string> JointMapping::frame_for(std::string_view segment) const {
    for (const auto& p : pairs_) {
        if (p.segment == segment) {
            return p.frame;
        }
    }
    return std::nullopt;
}

ChainModel::ChainModel(ModelDescription d)
    : name_(std::move(d.name)),
      segments_(std::move(d.segments)),
      joints_(std::move(d.joints)),
      coordinates_(std::move(d.coordinates)),
      muscles_(std::move(d.muscles)),
      mapping_(std::move(d.mapping)),
      gravity_(d.gravity) {
    validate_and_index();
}

namespace {

constexpr std::string_view kGround = "ground";

bool all_finite(const Vec3& v) { return v.allFinite(); }

} // namespace

void ChainModel::validate_and_index() {
    if (segments_.empty()) {
        throw ValidationError("model", "no segments declared");
    }
    if (!all_finite(gravity_)) {
        throw ValidationError("gravity", "non-finite component");
    }

    std::unordered_map<std::string, std::size_t> segment_ids;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const SegmentSpec& s = segments_[i];
        if (s.name.empty() || s.name == kGround) {
            throw ValidationError(s.name.empty() ? "segment#" + std::to_string(i) : s.name,
                                  "invalid segment name");
        }
        if (!segment_ids.emplace(s.name, i).second) {
            throw ValidationError(s.name, "duplicate segment name");
        }
        if (!(s.mass >= 0.0) || !std::isfinite(s.mass)) {
            throw ValidationError(s.name, "mass must be finite and >= 0");
        }
        if (!all_finite(s.com) || !s.inertia.allFinite()) {
            throw ValidationError(s.name, "non-finite inertial parameter");
        }
        const double scale = std::max(1.0, s.inertia.cwiseAbs().maxCoeff());
        if ((s.inertia - s.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
            throw ValidationError(s.name, "inertia tensor is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Mat3> eig(s.inertia, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-12) {
            throw ValidationError(s.name, "inertia tensor is not positive semidefinite");
        }
    }

    std::unordered_map<std::string, std::size_t> coordinate_ids;
    for (std::size_t i = 0; i < coordinates_.size(); ++i) {
        const CoordinateSpec& c = coordinates_[i];
        if (c.name.empty()) {
            throw ValidationError("coordinate#" + std::to_string(i), "empty coordinate name");
        }
        if (!coordinate_ids.emplace(c.name, i).second) {
            throw ValidationError(c.name, "duplicate coordinate name");
        }
        if (!(c.range_min <= c.range_max) || !std::isfinite(c.default_value)) {
            throw ValidationError(c.name, "invalid coordinate range or default");
        }
    }

    // Joints: names, axes, coordinate ownership, single parent per segment.
    std::set<std::string> joint_names;
    std::vector<int> coordinate_owner(coordinates_.size(), -1);
    segment_joint_.assign(segments_.size(), std::numeric_limits<std::size_t>::max());
    std::size_t dof_total = 0;
    std::size_t free_joints = 0;
    std::size_t root_joints = 0;
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        const JointSpec& joint = joints_[j];
        if (joint.name.empty()) {
            throw ValidationError("joint#" + std::to_string(j), "empty joint name");
        }
        if (!joint_names.insert(joint.name).second) {
            throw ValidationError(joint.name, "duplicate joint name");
        }
        if (joint.kind == JointKind::revolute &&
            (!all_finite(joint.axis) || std::abs(joint.axis.norm() - 1.0) > 1e-9)) {
            throw ValidationError(joint.name, "revolute axis is not unit length");
        }
        for (const RigidTransform* offset : {&joint.parent_offset, &joint.child_offset}) {
            if (!offset->translation.allFinite() || !offset->rotation.coeffs().allFinite() ||
                std::abs(offset->rotation.norm() - 1.0) > 1e-9) {
                throw ValidationError(joint.name, "offset rotation must be a unit quaternion");
            }
        }
        const auto child = segment_ids.find(joint.child);
        if (child == segment_ids.end()) {
            throw ValidationError(joint.name, "unknown child segment '" + joint.child + "'");
        }
        if (joint.parent != kGround && !segment_ids.contains(joint.parent)) {
            throw ValidationError(joint.name, "unknown parent segment '" + joint.parent + "'");
        }
        if (segment_joint_[child->second] != std::numeric_limits<std::size_t>::max()) {
            throw ValidationError(joint.child, "segment is the child of more than one joint");
        }
        segment_joint_[child->second] = j;
        if (joint.kind == JointKind::free) {
            ++free_joints;
            if (joint.parent != kGround) {
                throw ValidationError(joint.name, "free joint must connect to ground");
            }
        }
        if (joint.parent == kGround) {
            ++root_joints;
        }
        const int dofs = dof_count(joint.kind);
        if (static_cast<int>(joint.coordinates.size()) != dofs) {
            throw ValidationError(joint.name, std::string(to_string(joint.kind)) + " joint needs " +
                                                  std::to_string(dofs) + " coordinates");
        }
        for (const std::string& cname : joint.coordinates) {
            const auto it = coordinate_ids.find(cname);
            if (it == coordinate_ids.end()) {
                throw ValidationError(joint.name, "undeclared coordinate '" + cname + "'");
            }
            if (coordinate_owner[it->second] != -1) {
                throw ValidationError(cname, "coordinate driven by more than one joint");
            }
            coordinate_owner[it->second] = static_cast<int>(j);
        }
        dof_total += static_cast<std::size_t>(dofs);
    }
    if (free_joints != 1) {
        throw ValidationError("joints", "exactly one free joint required, found " +
                                            std::to_string(free_joints));
    }
    if (root_joints != 1) {
        throw ValidationError("joints", "exactly one joint may attach to ground");
    }
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        if (segment_joint_[i] == std::numeric_limits<std::size_t>::max()) {
            throw ValidationError(segments_[i].name, "segment is not the child of any joint");
        }
    }
    if (dof_total != coordinates_.size()) {
        throw ValidationError("coordinates", "coordinate count " + std::to_string(coordinates_.size()) +
                                                 " != total joint DOF " + std::to_string(dof_total));
    }
    for (std::size_t i = 0; i < coordinates_.size(); ++i) {
        if (coordinate_owner[i] == -1) {
            throw ValidationError(coordinates_[i].name, "coordinate not driven by any joint");
        }
    }

    // Topological order from ground; unreachable segments sit on a cycle.
    joint_order_.clear();
    std::vector<bool> placed(joints_.size(), false);
    std::vector<bool> reached(segments_.size(), false);
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t j = 0; j < joints_.size(); ++j) {
            if (placed[j]) {
                continue;
            }
            const JointSpec& joint = joints_[j];
            const bool parent_ready =
                joint.parent == kGround || reached[segment_ids.at(joint.parent)];
            if (parent_ready) {
                placed[j] = true;
                reached[segment_ids.at(joint.child)] = true;
                joint_order_.push_back(j);
                progress = true;
            }
        }
    }
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        if (!placed[j]) {
            throw ValidationError(joints_[j].name,
                                  "kinematic cycle: parent '" + joints_[j].parent +
                                      "' is a descendant of child '" + joints_[j].child + "'");
        }
    }

    joint_coordinates_.assign(joints_.size(), {});
    joint_parent_.assign(joints_.size(), -1);
    joint_child_.assign(joints_.size(), 0);
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        for (const std::string& c : joints_[j].coordinates) {
            joint_coordinates_[j].push_back(coordinate_ids.at(c));
        }
        joint_parent_[j] = joints_[j].parent == kGround
                               ? -1
                               : static_cast<int>(segment_ids.at(joints_[j].parent));
        joint_child_[j] = segment_ids.at(joints_[j].child);
    }

    // Expand joints into elementary steps.
    steps_.clear();
    joint_first_step_.assign(joints_.size(), 0);
    std::vector<int> segment_last_step(segments_.size(), -1);
    translational_.assign(coordinates_.size(), false);
    for (std::size_t j : joint_order_) {
        const JointSpec& joint = joints_[j];
        int parent_step = joint.parent == kGround
                              ? -1
                              : segment_last_step[segment_ids.at(joint.parent)];
        std::vector<std::pair<KinematicStep::Kind, std::pair<Vec3, std::size_t>>> local;
        auto coord = [&](std::size_t k) { return coordinate_ids.at(joint.coordinates[k]); };
        using K = KinematicStep::Kind;
        switch (joint.kind) {
        case JointKind::revolute:
            local.push_back({K::rotation, {joint.axis, coord(0)}});
            break;
        case JointKind::ball:
            local.push_back({K::rotation, {Vec3::UnitZ(), coord(0)}});
            local.push_back({K::rotation, {Vec3::UnitX(), coord(1)}});
            local.push_back({K::rotation, {Vec3::UnitY(), coord(2)}});
            break;
        case JointKind::free:
            local.push_back({K::translation, {Vec3::UnitX(), coord(3)}});
            local.push_back({K::translation, {Vec3::UnitY(), coord(4)}});
            local.push_back({K::translation, {Vec3::UnitZ(), coord(5)}});
            local.push_back({K::rotation, {Vec3::UnitZ(), coord(0)}});
            local.push_back({K::rotation, {Vec3::UnitX(), coord(1)}});
            local.push_back({K::rotation, {Vec3::UnitY(), coord(2)}});
            break;
        }
        joint_first_step_[j] = steps_.size();
        for (std::size_t k = 0; k < local.size(); ++k) {
            KinematicStep step;
            step.kind = local[k].first;
            step.axis = local[k].second.first;
            step.coordinate = local[k].second.second;
            step.joint = j;
            step.parent = parent_step;
            if (step.kind == K::translation) {
                translational_[step.coordinate] = true;
            }
            parent_step = static_cast<int>(steps_.size());
            steps_.push_back(step);
        }
        const std::size_t child = segment_ids.at(joint.child);
        steps_.back().segment = static_cast<int>(child);
        segment_last_step[child] = static_cast<int>(steps_.size() - 1);
    }

    rotation_paths_.assign(segments_.size(), {});
    for (std::size_t s = 0; s < segments_.size(); ++s) {
        std::vector<std::size_t> path;
        for (int k = segment_last_step[s]; k >= 0; k = steps_[static_cast<std::size_t>(k)].parent) {
            if (steps_[static_cast<std::size_t>(k)].kind == KinematicStep::Kind::rotation) {
                path.push_back(static_cast<std::size_t>(k));
            }
        }
        std::reverse(path.begin(), path.end());
        rotation_paths_[s] = std::move(path);
    }

    // Muscles.
    std::set<std::string> muscle_names;
    Eigen::VectorXd lower(coordinates_.size()), upper(coordinates_.size()), mid(coordinates_.size());
    for (std::size_t i = 0; i < coordinates_.size(); ++i) {
        lower[static_cast<Eigen::Index>(i)] = coordinates_[i].range_min;
        upper[static_cast<Eigen::Index>(i)] = coordinates_[i].range_max;
        mid[static_cast<Eigen::Index>(i)] = coordinates_[i].default_value;
    }
    auto check_polynomial = [&](const Polynomial& p, const std::string& owner) {
        for (const auto& term : p.terms) {
            if (!std::isfinite(term.coeff)) {
                throw ValidationError(owner, "non-finite polynomial coefficient");
            }
            for (const auto& [index, power] : term.powers) {
                if (index >= coordinates_.size()) {
                    throw ValidationError(owner, "polynomial references undeclared coordinate");
                }
                if (power < 0) {
                    throw ValidationError(owner, "negative polynomial exponent");
                }
            }
        }
        for (const Eigen::VectorXd* q : {&lower, &upper, &mid}) {
            if (!std::isfinite(p.evaluate(*q))) {
                throw ValidationError(owner, "polynomial not finite over coordinate range");
            }
        }
    };
    for (const MuscleSpec& m : muscles_) {
        if (m.name.empty() || !muscle_names.insert(m.name).second) {
            throw ValidationError(m.name.empty() ? "muscle" : m.name, "empty or duplicate muscle name");
        }
        if (!(m.f_max > 0.0) || !std::isfinite(m.f_max)) {
            throw ValidationError(m.name, "f_max must be > 0");
        }
        std::set<std::size_t> seen;
        for (const MomentArm& arm : m.moment_arms) {
            if (arm.coordinate >= coordinates_.size()) {
                throw ValidationError(m.name, "moment arm references undeclared coordinate");
            }
            if (!seen.insert(arm.coordinate).second) {
                throw ValidationError(m.name, "duplicate moment arm for coordinate '" +
                                                  coordinates_[arm.coordinate].name + "'");
            }
            check_polynomial(arm.polynomial, m.name);
        }
        if (m.length) {
            check_polynomial(*m.length, m.name);
        }
    }

    // Mapping: bijective, resolvable.
    std::set<std::string> frames;
    std::set<std::string> mapped_segments;
    for (const FrameMapping& p : mapping_.pairs()) {
        if (p.frame.empty() || !frames.insert(p.frame).second) {
            throw ValidationError(p.frame.empty() ? "mapping" : p.frame, "empty or duplicate frame name");
        }
        if (!segment_ids.contains(p.segment)) {
            throw ValidationError(p.frame, "maps to unknown segment '" + p.segment + "'");
        }
        if (!mapped_segments.insert(p.segment).second) {
            throw ValidationError(p.segment, "segment mapped by more than one frame");
        }
        for (const std::string& c : p.coordinates) {
            if (!coordinate_ids.contains(c)) {
                throw ValidationError(p.frame, "maps undeclared coordinate '" + c + "'");
            }
        }
    }
}

std::optional<std::size_t> ChainModel::find_segment(std::string_view name) const {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        if (segments_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> ChainModel::find_coordinate(std::string_view name) const {
    for (std::size_t i = 0; i < coordinates_.size(); ++i) {
        if (coordinates_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t ChainModel::segment_index(std::string_view name) const {
    if (auto i = find_segment(name)) {
        return *i;
    }
    throw ValidationError(std::string(name), "unknown segment");
}

std::size_t ChainModel::coordinate_index(std::string_view name) const {
    if (auto i = find_coordinate(name)) {
        return *i;
    }
    throw ValidationError(std::string(name), "unknown coordinate");
}

std::vector<std::string> ChainModel::coordinate_names() const {
    std::vector<std::string> names;
    names.reserve(coordinates_.size());
    for (const auto& c : coordinates_) {
        names.push_back(c.name);
    }
    return names;
}

Eigen::VectorXd ChainModel::default_pose() const {
    Eigen::VectorXd q(static_cast<Eigen::Index>(coordinates_.size()));
    for (std::size_t i = 0; i < coordinates_.size(); ++i) {
        q[static_cast<Eigen::Index>(i)] = coordinates_[i].default_value;
    }
    return q;
}

double ChainModel::total_mass() const {
    double m = 0.0;
    for (const auto& s : segments_) {
        m += s.mass;
    }
    return m;
}

bool ChainModel::is_translational(std::size_t coordinate) const {
    return translational_.at(coordinate);
}

RigidTransform joint_motion(const JointSpec& joint, const double* q) {
    switch (joint.kind) {
    case JointKind::revolute:
        return RigidTransform::from_rotation(axis_angle(joint.axis, q[0]));
    case JointKind::ball:
        return RigidTransform::from_rotation(euler_zxy(q[0], q[1], q[2]));
    case JointKind::free:
        return RigidTransform{euler_zxy(q[0], q[1], q[2]), Vec3(q[3], q[4], q[5])};
    }
    return {};
}

namespace {

void check_dimension(const ChainModel& model, const Eigen::Ref<const Eigen::VectorXd>& q) {
    if (static_cast<std::size_t>(q.size()) != model.coordinate_count()) {
        throw DimensionError("coordinate vector has " + std::to_string(q.size()) +
                             " entries, model has " + std::to_string(model.coordinate_count()));
    }
}

} // namespace

std::vector<RigidTransform> forward_kinematics(const ChainModel& model,
                                               const Eigen::Ref<const Eigen::VectorXd>& q) {
    check_dimension(model, q);
    if (!q.allFinite()) {
        throw DimensionError("coordinate vector contains non-finite values");
    }
    std::vector<RigidTransform> poses(model.segment_count());
    std::array<double, 6> slice{};
    for (std::size_t j : model.joint_order()) {
        const JointSpec& joint = model.joints()[j];
        const auto& coords = model.joint_coordinates(j);
        for (std::size_t k = 0; k < coords.size(); ++k) {
            slice[k] = q[static_cast<Eigen::Index>(coords[k])];
        }
        const int parent_index = model.joint_parent(j);
        const RigidTransform parent = parent_index < 0
                                          ? RigidTransform::identity()
                                          : poses[static_cast<std::size_t>(parent_index)];
        poses[model.joint_child(j)] =
            parent * joint.parent_offset * joint_motion(joint, slice.data()) * joint.child_offset;
    }
    return poses;
}

KinematicState ChainModel::kinematic_state(const Eigen::Ref<const Eigen::VectorXd>& q) const {
    check_dimension(*this, q);
    KinematicState state;
    state.segments.resize(segments_.size());
    state.step_origins.resize(steps_.size());
    state.step_axes.resize(steps_.size());

    for (std::size_t j : joint_order_) {
        const JointSpec& joint = joints_[j];
        const std::size_t first = joint_first_step_[j];
        const int parent_index = joint_parent_[j];
        RigidTransform frame = parent_index < 0
                                   ? RigidTransform::identity()
                                   : state.segments[static_cast<std::size_t>(parent_index)];
        frame = frame * joint.parent_offset;
        const std::size_t count = static_cast<std::size_t>(dof_count(joint.kind));
        for (std::size_t k = first; k < first + count; ++k) {
            const KinematicStep& step = steps_[k];
            const double value = q[static_cast<Eigen::Index>(step.coordinate)];
            const Vec3 world_axis = frame.rotation * step.axis;
            if (step.kind == KinematicStep::Kind::rotation) {
                frame = frame * RigidTransform::from_rotation(axis_angle(step.axis, value));
            } else {
                frame = frame * RigidTransform::from_translation(step.axis * value);
            }
            state.step_axes[k] = world_axis;
            state.step_origins[k] = frame.translation;
        }
        state.segments[joint_child_[j]] = frame * joint.child_offset;
    }
    return state;
}

Eigen::MatrixXd moment_arms(const ChainModel& model, const Eigen::Ref<const Eigen::VectorXd>& q) {
    check_dimension(model, q);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.coordinate_count()),
                                              static_cast<Eigen::Index>(model.muscle_count()));
    for (std::size_t i = 0; i < model.muscle_count(); ++i) {
        for (const MomentArm& arm : model.muscles()[i].moment_arms) {
            r(static_cast<Eigen::Index>(arm.coordinate), static_cast<Eigen::Index>(i)) =
                arm.polynomial.evaluate(q);
        }
    }
    return r;
}

Eigen::VectorXd musculotendon_lengths(const ChainModel& model,
                                      const Eigen::Ref<const Eigen::VectorXd>& q) {
    check_dimension(model, q);
    Eigen::VectorXd out(static_cast<Eigen::Index>(model.muscle_count()));
    for (std::size_t i = 0; i < model.muscle_count(); ++i) {
        const auto& m = model.muscles()[i];
        out[static_cast<Eigen::Index>(i)] =
            m.length ? m.length->evaluate(q) : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

} // namespace mskrt
