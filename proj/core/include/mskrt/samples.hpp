#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mskrt/geometry.hpp"

namespace mskrt {

/// Orientation of one sensor frame in the global inertial frame.
struct OrientationSample {
    double t = 0.0;  // s, pipeline clock
    std::string frame;
    Quat quat = Quat::Identity();
};

/// All sensor orientations sharing one stamp.
struct OrientationFrame {
    double t = 0.0;
    std::vector<OrientationSample> samples;
};

enum class Side { left, right };

std::string_view to_string(Side side);
/// Accepts "left"/"L"/"l" and "right"/"R"/"r"; throws ParseError otherwise.
Side parse_side(std::string_view text);

/// One insole measurement as delivered by the multiplexed driver socket.
/// cop_x is anteroposterior (heel to toe), cop_y mediolateral, both m in the
/// insole frame.
struct InsoleRecord {
    Side side = Side::left;
    std::int64_t tick = 0;
    double normal_force = 0.0;  // N
    double cop_x = 0.0;
    double cop_y = 0.0;
};

struct InsoleBurst {
    double arrival_t = 0.0;
    std::vector<InsoleRecord> records;
};

/// Re-stamped, per-side insole measurement.
struct InsoleSample {
    double t = 0.0;
    Side side = Side::left;
    std::int64_t tick = 0;
    double normal_force = 0.0;
    Eigen::Vector2d cop = Eigen::Vector2d::Zero();
};

} // namespace mskrt
