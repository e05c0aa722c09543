#include "mskrt/streams.hpp"

#include <algorithm>

#include "mskrt/errors.hpp"
#include "mskrt/signal.hpp"

namespace mskrt {

double SyncEvent::stamp(Side side, std::int64_t tick) const {
    return anchor_t + static_cast<double>(tick - anchor(side)) / rate;
}

std::optional<SyncEvent> sync_from_burst(const InsoleBurst& burst, double rate) {
    std::optional<std::int64_t> left, right;
    for (const InsoleRecord& r : burst.records) {
        auto& slot = r.side == Side::left ? left : right;
        if (!slot) {
            slot = r.tick;
        }
    }
    if (!left || !right) {
        return std::nullopt;
    }
    if (!(rate > 0.0)) {
        throw Error("sync: rate must be positive");
    }
    return SyncEvent{*left, *right, burst.arrival_t, rate};
}

SyncEvent sync_from_record(const SyncRecord& record, double rate) {
    if (!(rate > 0.0)) {
        throw Error("sync: rate must be positive");
    }
    return SyncEvent{record.left_tick, record.right_tick, record.t, rate};
}

InsoleDemux::InsoleDemux(SyncEvent sync, std::int64_t reorder_window)
    : sync_(sync), window_(reorder_window) {
    if (!(sync_.rate > 0.0)) {
        throw Error("demux: sync rate must be positive");
    }
    if (window_ < 0) {
        throw Error("demux: reorder window must be non-negative");
    }
}

void InsoleDemux::push(const InsoleRecord& record, std::vector<InsoleSample>& out) {
    SideState& s = record.side == Side::left ? left_ : right_;
    if (s.last_released && record.tick <= *s.last_released) {
        const bool dup = record.tick == *s.last_released;
        drops_.push_back({record.side, record.tick,
                          dup ? DemuxDrop::Reason::duplicate : DemuxDrop::Reason::late});
        return;
    }
    if (s.pending.contains(record.tick)) {
        drops_.push_back({record.side, record.tick, DemuxDrop::Reason::duplicate});
        return;
    }
    InsoleRecord clean = record;
    clean.normal_force = std::max(0.0, clean.normal_force);
    s.pending.emplace(clean.tick, clean);
    s.newest = s.newest ? std::max(*s.newest, clean.tick) : clean.tick;
    release(record.side, s, false, out);
}

std::vector<InsoleSample> InsoleDemux::push(const InsoleBurst& burst) {
    std::vector<InsoleSample> out;
    for (const InsoleRecord& r : burst.records) {
        push(r, out);
    }
    return out;
}

std::vector<InsoleSample> InsoleDemux::flush() {
    std::vector<InsoleSample> out;
    release(Side::left, left_, true, out);
    release(Side::right, right_, true, out);
    return out;
}

void InsoleDemux::release(Side side, SideState& s, bool all, std::vector<InsoleSample>& out) {
    while (!s.pending.empty()) {
        auto it = s.pending.begin();
        if (!all && *s.newest - it->first < window_) {
            break;
        }
        const InsoleRecord& r = it->second;
        out.push_back({sync_.stamp(side, r.tick), side, r.tick, r.normal_force,
                       Eigen::Vector2d(r.cop_x, r.cop_y)});
        s.last_released = r.tick;
        s.pending.erase(it);
    }
}

DemuxOutput demux_restamp(std::span<const InsoleBurst> bursts, const SyncEvent& sync,
                          std::int64_t reorder_window) {
    InsoleDemux demux(sync, reorder_window);
    std::vector<InsoleSample> all;
    for (const InsoleBurst& b : bursts) {
        for (const InsoleRecord& r : b.records) {
            demux.push(r, all);
        }
    }
    for (InsoleSample& s : demux.flush()) {
        all.push_back(s);
    }
    DemuxOutput out;
    for (InsoleSample& s : all) {
        (s.side == Side::left ? out.left : out.right).push_back(s);
    }
    out.drops = demux.drops();
    return out;
}

std::vector<StanceInterval> segment_steps(std::span<const InsoleSample> side_stream,
                                          double body_weight, double cutoff_hz,
                                          double threshold_fraction) {
    std::vector<double> t, f;
    t.reserve(side_stream.size());
    f.reserve(side_stream.size());
    for (const InsoleSample& s : side_stream) {
        t.push_back(s.t);
        f.push_back(s.normal_force);
    }
    return segment_steps(t, f, body_weight, cutoff_hz, threshold_fraction);
}

std::vector<StanceInterval> segment_steps(std::span<const double> t, std::span<const double> force,
                                          double body_weight, double cutoff_hz,
                                          double threshold_fraction) {
    if (!(body_weight > 0.0)) {
        throw Error("segment_steps: body weight must be positive");
    }
    if (t.size() != force.size()) {
        throw DimensionError("segment_steps: time and force lengths differ");
    }
    std::vector<StanceInterval> out;
    if (t.empty()) {
        return out;
    }
    std::vector<double> filtered(force.begin(), force.end());
    if (t.size() >= 2) {
        const double fs = static_cast<double>(t.size() - 1) / (t.back() - t.front());
        BiquadFilter lp(lowpass_biquad(cutoff_hz, fs));
        lp.settle(force.front());
        for (double& v : filtered) {
            v = lp.step(v);
        }
    }
    const double threshold = threshold_fraction * body_weight;
    std::optional<double> on;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!on && filtered[k] >= threshold) {
            on = t[k];
        } else if (on && filtered[k] < threshold) {
            out.push_back({*on, t[k]});
            on.reset();
        }
    }
    if (on) {
        out.push_back({*on, t.back()});
    }
    return out;
}

} // namespace mskrt
