#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mskrt/errors.hpp"
#include "mskrt/geometry.hpp"
#include "mskrt/model.hpp"
#include "mskrt/samples.hpp"

namespace mskrt {

/// Raised when the quaternion accumulator has two equal dominant eigenvalues.
class AmbiguousAverageError : public Error {
public:
    using Error::Error;
};

/// Average rotation of unit quaternions: the dominant eigenvector of
/// sum(q_i q_i^T), i.e. the maximizer of sum((q^T q_i)^2). Insensitive to the
/// sign of each input; the result has a non-negative scalar part.
Quat average_quaternions(std::span<const Quat> samples);

enum class HeadingMode { global, per_sensor };

struct SensorCalibration {
    std::string segment;
    Quat offset = Quat::Identity();  // sensor frame expressed in segment frame
    double heading = 0.0;            // rad, yaw applied to the measurement
};

/// Fixed sensor-to-segment rotations plus heading correction.
///
/// segment orientation = Rz(heading) * measured * offset^-1
struct CalibrationSet {
    std::map<std::string, SensorCalibration> sensors;
    double heading_correction = 0.0;
    HeadingMode mode = HeadingMode::global;

    bool has(const std::string& frame) const { return sensors.contains(frame); }
    /// Throws ValidationError for an uncalibrated frame.
    Quat apply(const std::string& frame, const Quat& measured) const;
};

struct CalibrationOptions {
    std::size_t frames = 10;
    /// Sensor frame whose heading anchors the global correction; empty picks
    /// the frame mapped to the root segment.
    std::string heading_reference;
    HeadingMode mode = HeadingMode::global;
    /// Frames that must be present; empty means whatever was supplied.
    std::vector<std::string> required;
};

CalibrationSet calibrate(const ChainModel& model, const Eigen::VectorXd& default_pose,
                         const std::map<std::string, std::vector<OrientationSample>>& frames,
                         const CalibrationOptions& options = {});

void save_calibration(const std::filesystem::path& path, const CalibrationSet& set);
CalibrationSet load_calibration(const std::filesystem::path& path);
std::string calibration_to_json(const CalibrationSet& set);
CalibrationSet calibration_from_json(std::string_view text);

} // namespace mskrt
