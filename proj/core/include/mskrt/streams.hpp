#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mskrt/samples.hpp"
#include "mskrt/session.hpp"

namespace mskrt {

/// Maps insole ticks to pipeline time: t = anchor_t + (tick - anchor_tick) / rate.
struct SyncEvent {
    std::int64_t left_tick = 0;
    std::int64_t right_tick = 0;
    double anchor_t = 0.0;
    double rate = 100.0;  // Hz

    std::int64_t anchor(Side side) const { return side == Side::left ? left_tick : right_tick; }
    double stamp(Side side, std::int64_t tick) const;
};

/// Anchors from the first burst containing both sides (first tick seen per
/// side, stamped with the burst arrival time); nullopt if one side is absent.
std::optional<SyncEvent> sync_from_burst(const InsoleBurst& burst, double rate = 100.0);
SyncEvent sync_from_record(const SyncRecord& record, double rate = 100.0);

struct DemuxDrop {
    Side side;
    std::int64_t tick;
    enum class Reason { late, duplicate } reason;
};

/// Per-side reorder buffer. Records are fed one at a time in arrival order; a
/// tick is released once the newest tick seen on its side is at least
/// `reorder_window` ticks ahead (or on flush). Ticks at or below the last
/// released tick and repeated ticks are dropped and recorded. The output is
/// therefore independent of how records were grouped into bursts.
class InsoleDemux {
public:
    explicit InsoleDemux(SyncEvent sync, std::int64_t reorder_window = 5);

    /// Appends released samples to `out`.
    void push(const InsoleRecord& record, std::vector<InsoleSample>& out);
    std::vector<InsoleSample> push(const InsoleBurst& burst);
    std::vector<InsoleSample> flush();

    const std::vector<DemuxDrop>& drops() const { return drops_; }
    const SyncEvent& sync() const { return sync_; }

private:
    struct SideState {
        std::map<std::int64_t, InsoleRecord> pending;
        std::optional<std::int64_t> last_released;
        std::optional<std::int64_t> newest;
    };
    void release(Side side, SideState& s, bool all, std::vector<InsoleSample>& out);

    SyncEvent sync_;
    std::int64_t window_;
    SideState left_;
    SideState right_;
    std::vector<DemuxDrop> drops_;
};

struct DemuxOutput {
    std::vector<InsoleSample> left;
    std::vector<InsoleSample> right;
    std::vector<DemuxDrop> drops;

    const std::vector<InsoleSample>& side(Side s) const { return s == Side::left ? left : right; }
};

DemuxOutput demux_restamp(std::span<const InsoleBurst> bursts, const SyncEvent& sync,
                          std::int64_t reorder_window = 5);

struct StanceInterval {
    double t_on = 0.0;
    double t_off = 0.0;
};

/// Stance phases of one foot: the force is low-passed (2nd-order Butterworth,
/// state settled on the first sample) and thresholded at
/// threshold_fraction * body_weight. An interval still open at the end of the
/// stream closes at the last sample.
std::vector<StanceInterval> segment_steps(std::span<const InsoleSample> side_stream,
                                          double body_weight, double cutoff_hz = 5.0,
                                          double threshold_fraction = 0.10);
std::vector<StanceInterval> segment_steps(std::span<const double> t, std::span<const double> force,
                                          double body_weight, double cutoff_hz = 5.0,
                                          double threshold_fraction = 0.10);

} // namespace mskrt
