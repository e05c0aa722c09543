#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mskrt/calib.hpp"
#include "mskrt/config.hpp"
#include "mskrt/csv.hpp"
#include "mskrt/model.hpp"
#include "mskrt/session.hpp"
#include "mskrt/so.hpp"
#include "mskrt/telemetry.hpp"

namespace mskrt {

struct DiscardRecord {
    std::string stage;  // demux | sync | so
    double t = 0.0;
    std::string reason;
};

struct RunCounters {
    std::size_t frames = 0;          // orientation frames received
    std::size_t calibration_frames = 0;
    std::size_t states = 0;          // joint states produced by IK
    std::size_t ik_unconverged = 0;
    std::size_t matched = 0;         // states paired with both insoles
    std::size_t sync_dropped = 0;
    std::size_t demux_dropped = 0;
    std::size_t so_received = 0;
    std::size_t so_emitted = 0;
    std::size_t so_discarded = 0;
    std::size_t so_unconverged = 0;
    double max_kkt = 0.0;            // over converged solves
    double max_activation = 0.0;
    double min_activation = 0.0;
};

struct RunResult {
    CsvTable q;    // IK output (filtered), rad or m
    CsvTable tau;  // generalized forces at matched states
    CsvTable act;  // emitted activations, then residual actuators
    std::vector<Delivery> deliveries;  // one per SO message, by message index
    std::vector<std::size_t> deliveries_index;
    std::vector<std::size_t> assignments;  // worker per SO message
    std::vector<DiscardRecord> discards;
    LatencyReport report;
    CalibrationSet calibration;
    bool calibrated_online = false;
    RunCounters counters;
};

/// Extra knobs for tests and experiments that do not belong in a config file.
struct RunHooks {
    DelayInjector extra_delay;
};

/// Runs the whole chain on an in-memory session. Without a calibration the
/// first config.calibrate.frames frames (model default pose) calibrate the
/// sensors. Logical mode runs on virtual time and is deterministic; realtime
/// mode replays on the steady clock with threaded SO workers.
RunResult run_pipeline(const PipelineConfig& config, const ChainModel& model,
                       const Session& session, std::optional<CalibrationSet> calibration,
                       const RunHooks& hooks = {});
/// Loads model, session and calibration named by the config.
RunResult run_pipeline(const PipelineConfig& config, const RunHooks& hooks = {});

/// Writes q.csv, tau.csv, act.csv, events.csv, discards.csv,
/// latency_report.txt/.csv, run.json and (when calibrated online)
/// calibration.json into `dir`.
void write_outputs(const std::filesystem::path& dir, const PipelineConfig& config,
                   const RunResult& result);

/// Recomputes the latency report from a run's events.csv and run.json.
LatencyReport report_from_dir(const std::filesystem::path& dir);

} // namespace mskrt
