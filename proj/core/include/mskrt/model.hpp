#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mskrt/geometry.hpp"

namespace mskrt {

struct SegmentSpec {
    std::string name;
    double mass = 0.0;            // kg
    Vec3 com = Vec3::Zero();      // segment frame, m
    Mat3 inertia = Mat3::Zero();  // about COM, segment frame, kg m^2
};

enum class JointKind { revolute, ball, free };

int dof_count(JointKind kind);
std::string_view to_string(JointKind kind);

/// Joint connecting `parent` (segment name or "ground") to `child`.
///
/// child pose = parent pose * parent_offset * motion(q) * child_offset, where
/// motion is a rotation about `axis` (revolute), an intrinsic Z-X-Y Euler
/// rotation (ball), or translation followed by Z-X-Y rotation (free). The
/// `coordinates` list gives the generalized coordinates in DOF order: ball
/// [z, x, y]; free [z, x, y, tx, ty, tz].
struct JointSpec {
    std::string name;
    JointKind kind = JointKind::revolute;
    Vec3 axis = Vec3::UnitZ();
    std::string parent;
    std::string child;
    RigidTransform parent_offset;
    RigidTransform child_offset;
    std::vector<std::string> coordinates;
};

struct CoordinateSpec {
    std::string name;
    double default_value = 0.0;
    double range_min = -3.141592653589793;
    double range_max = 3.141592653589793;
};

/// Multivariate polynomial in the generalized coordinates. Each term is
/// coeff * prod(q[index]^power).
struct Polynomial {
    struct Term {
        double coeff = 0.0;
        std::vector<std::pair<std::size_t, int>> powers;
    };
    std::vector<Term> terms;

    double evaluate(const Eigen::Ref<const Eigen::VectorXd>& q) const;
    Polynomial derivative(std::size_t coordinate) const;
    bool empty() const { return terms.empty(); }
};

struct MomentArm {
    std::size_t coordinate = 0;
    Polynomial polynomial;  // m
};

struct MuscleSpec {
    std::string name;
    double f_max = 0.0;  // N
    std::vector<MomentArm> moment_arms;
    /// Musculotendon length L(q), m. Optional; when present the moment arms
    /// are expected to equal -dL/dq.
    std::optional<Polynomial> length;
};

struct FrameMapping {
    std::string frame;    // external (sensor / transform tree) name
    std::string segment;  // model segment
    std::vector<std::string> coordinates;
};

class JointMapping {
public:
    JointMapping() = default;
    explicit JointMapping(std::vector<FrameMapping> pairs);

    const std::vector<FrameMapping>& pairs() const { return pairs_; }
    std::optional<std::string> segment_for(std::string_view frame) const;
    std::optional<std::string> frame_for(std::string_view segment) const;

private:
    std::vector<FrameMapping> pairs_;
};

/// Everything needed to build a ChainModel; what the model file parser fills.
struct ModelDescription {
    std::string name;
    std::vector<SegmentSpec> segments;
    std::vector<JointSpec> joints;
    std::vector<CoordinateSpec> coordinates;
    std::vector<MuscleSpec> muscles;
    std::vector<FrameMapping> mapping;
    Vec3 gravity{0.0, 0.0, -9.80665};
};

/// One elementary degree of freedom. Multi-DOF joints expand into a chain of
/// these (massless intermediate frames), which is what RNE and the IK
/// Jacobian iterate over.
struct KinematicStep {
    enum class Kind { rotation, translation };
    Kind kind = Kind::rotation;
    Vec3 axis = Vec3::UnitZ();     // in the step frame
    std::size_t coordinate = 0;
    std::size_t joint = 0;
    int parent = -1;               // previous step along the tree, -1 = ground
    int segment = -1;              // segment carried by this step's frame, if any
};

/// World-frame kinematic quantities at one configuration.
struct KinematicState {
    std::vector<RigidTransform> segments;  // per segment, model order
    std::vector<Vec3> step_origins;        // per step, frame after motion
    std::vector<Vec3> step_axes;           // per step, unit, world frame
};

/// Immutable kinematic/dynamic/muscular model. Constructing one validates
/// every structural invariant and throws ValidationError naming the entity.
class ChainModel {
public:
    explicit ChainModel(ModelDescription description);

    const std::string& name() const { return name_; }
    const std::vector<SegmentSpec>& segments() const { return segments_; }
    const std::vector<JointSpec>& joints() const { return joints_; }
    const std::vector<CoordinateSpec>& coordinates() const { return coordinates_; }
    const std::vector<MuscleSpec>& muscles() const { return muscles_; }
    const JointMapping& mapping() const { return mapping_; }
    const Vec3& gravity() const { return gravity_; }

    std::size_t coordinate_count() const { return coordinates_.size(); }
    std::size_t muscle_count() const { return muscles_.size(); }
    std::size_t segment_count() const { return segments_.size(); }

    std::optional<std::size_t> find_segment(std::string_view name) const;
    std::optional<std::size_t> find_coordinate(std::string_view name) const;
    /// Throws ValidationError when absent.
    std::size_t segment_index(std::string_view name) const;
    std::size_t coordinate_index(std::string_view name) const;

    std::vector<std::string> coordinate_names() const;
    Eigen::VectorXd default_pose() const;
    double total_mass() const;

    /// True for coordinates driven by a translation DOF.
    bool is_translational(std::size_t coordinate) const;

    const std::vector<KinematicStep>& steps() const { return steps_; }
    /// Joint indices sorted so that parents precede children.
    const std::vector<std::size_t>& joint_order() const { return joint_order_; }
    /// Index of the joint whose child is the given segment.
    std::size_t joint_of_segment(std::size_t segment) const { return segment_joint_[segment]; }
    const std::vector<std::size_t>& joint_coordinates(std::size_t joint) const {
        return joint_coordinates_[joint];
    }
    /// Parent segment index of a joint, -1 for ground.
    int joint_parent(std::size_t joint) const { return joint_parent_[joint]; }
    std::size_t joint_child(std::size_t joint) const { return joint_child_[joint]; }
    /// Rotation steps between ground and the segment's frame, root first.
    const std::vector<std::size_t>& rotation_path(std::size_t segment) const {
        return rotation_paths_[segment];
    }

    KinematicState kinematic_state(const Eigen::Ref<const Eigen::VectorXd>& q) const;

private:
    void validate_and_index();

    std::string name_;
    std::vector<SegmentSpec> segments_;
    std::vector<JointSpec> joints_;
    std::vector<CoordinateSpec> coordinates_;
    std::vector<MuscleSpec> muscles_;
    JointMapping mapping_;
    Vec3 gravity_;

    std::vector<std::size_t> joint_order_;
    std::vector<std::size_t> segment_joint_;
    std::vector<std::size_t> joint_first_step_;
    std::vector<std::vector<std::size_t>> joint_coordinates_;
    std::vector<int> joint_parent_;
    std::vector<std::size_t> joint_child_;
    std::vector<KinematicStep> steps_;
    std::vector<std::vector<std::size_t>> rotation_paths_;
    std::vector<bool> translational_;
};

/// Parses and validates a model file (JSON schema, see docs/model_format.md).
ChainModel load_model(const std::filesystem::path& path);
ChainModel parse_model(std::string_view text, std::string_view origin = "<memory>");

/// Ground-frame pose of every segment, indexed like model.segments().
std::vector<RigidTransform> forward_kinematics(const ChainModel& model,
                                               const Eigen::Ref<const Eigen::VectorXd>& q);

/// Local joint motion for the joint's coordinate slice.
RigidTransform joint_motion(const JointSpec& joint, const double* q);

/// Moment-arm matrix, coordinates x muscles, m.
Eigen::MatrixXd moment_arms(const ChainModel& model, const Eigen::Ref<const Eigen::VectorXd>& q);

/// Musculotendon lengths; NaN for muscles that declare no length polynomial.
Eigen::VectorXd musculotendon_lengths(const ChainModel& model,
                                      const Eigen::Ref<const Eigen::VectorXd>& q);

} // namespace mskrt
