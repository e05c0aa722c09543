#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include "mskrt/calib.hpp"
#include "mskrt/filter.hpp"
#include "mskrt/ik.hpp"
#include "mskrt/session.hpp"
#include "mskrt/so.hpp"
#include "mskrt/synth.hpp"

namespace mskrt {

struct SyncConfig {
    double delay_s = 0.26;  // buffer delay between IK output and matching
    double tol_s = 0.015;   // largest accepted |t_wrench - t_js|
};

struct SoConfig {
    std::size_t workers = 12;
    double deadline_s = 0.5;
    double residual_weight = 1e3;
    double virtual_cost_s = 0.025;  // logical mode solve duration
    SoOptions options;
};

struct InsoleConfig {
    double rate = 100.0;  // Hz, tick rate
    std::int64_t reorder_window = 5;
    double activation_threshold = 10.0;  // N
    InsoleSetup left = default_insole("calcn_l");
    InsoleSetup right = default_insole("calcn_r");

    const InsoleSetup& setup(Side side) const { return side == Side::left ? left : right; }
};

/// Run description. Relative paths in the file resolve against the file's
/// directory.
///
/// {
///   "model": "lower_body.json",
///   "session": "walking.session",
///   "calibration": "calib.json",          (optional; else first frames)
///   "output_dir": "out",
///   "mode": "logical" | "realtime",
///   "body_weight": 737.3,                 (N; optional, model mass * g)
///   "sync":   {"delay_s": 0.26, "tol_s": 0.015},
///   "so":     {"workers": 12, "deadline_s": 0.5, "residual_weight": 1000,
///              "virtual_cost_s": 0.025, "kkt_tolerance": 1e-8,
///              "max_iterations": 500},
///   "filter": {"ik":     {"window": 20, "smoothing": 0, "delay": 10},
///              "insole": {"window": 20, "smoothing": 0, "delay": 10}},
///   "insole": {"rate": 100, "reorder_window": 5, "activation_threshold": 10,
///              "left":  {"body": "calcn_l",
///                        "mount": {"rotation": [w, x, y, z],
///                                  "translation": [x, y, z]}},
///              "right": {...}},
///   "ik":     {"weights": {"pelvis_link": 1.0}, "max_iterations": 50},
///   "calibrate": {"frames": 10, "heading_reference": "pelvis_link",
///                 "heading_mode": "global" | "per_sensor"}
/// }
struct PipelineConfig {
    std::filesystem::path model;
    std::filesystem::path session;
    std::optional<std::filesystem::path> calibration;
    std::filesystem::path output_dir = "out";
    PlaybackMode mode = PlaybackMode::logical;
    std::optional<double> body_weight;

    SyncConfig sync;
    SoConfig so;
    SplineWindow ik_filter{20, 0.0, 10};
    SplineWindow insole_filter{20, 0.0, 10};
    InsoleConfig insole;
    IkOptions ik;
    CalibrationOptions calibrate;

    /// Value checks only (ranges, filter windows). Throws ConfigError.
    void validate() const;
    /// validate() plus existence of every referenced input file.
    void check_files() const;
};

/// Throws ConfigError on malformed text, unknown keys or invalid values.
/// Paths are resolved against `base_dir`.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

} // namespace mskrt
