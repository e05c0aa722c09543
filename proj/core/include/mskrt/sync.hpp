#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <initializer_list>
#include <iterator>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "mskrt/errors.hpp"

namespace mskrt {

/// Time-ordered bounded buffer. Entries older than newest - max_age and
/// entries beyond capacity (oldest first) are evicted on insert.
template <typename T>
class TimedBuffer {
public:
    struct Entry {
        double t;
        T value;
    };

    explicit TimedBuffer(std::size_t capacity = 512, double max_age = 5.0)
        : capacity_(capacity), max_age_(max_age) {
        if (capacity_ == 0) {
            throw Error("timed buffer capacity must be positive");
        }
        if (!(max_age_ > 0.0)) {
            throw Error("timed buffer max_age must be positive");
        }
    }

    void push(double t, T value) {
        auto pos = entries_.end();
        while (pos != entries_.begin() && std::prev(pos)->t > t) {
            --pos;
        }
        entries_.insert(pos, Entry{t, std::move(value)});
        const double horizon = entries_.back().t - max_age_;
        while (!entries_.empty() && (entries_.size() > capacity_ || entries_.front().t < horizon)) {
            entries_.pop_front();
        }
    }

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    double max_age() const { return max_age_; }
    const std::deque<Entry>& entries() const { return entries_; }
    std::optional<double> newest() const {
        return entries_.empty() ? std::nullopt : std::optional<double>(entries_.back().t);
    }

    /// Index of the entry closest to t; ties go to the earlier entry.
    std::optional<std::size_t> nearest(double t) const {
        std::optional<std::size_t> best;
        double best_dt = 0.0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const double dt = std::abs(entries_[i].t - t);
            if (!best || dt < best_dt) {
                best = i;
                best_dt = dt;
            }
        }
        return best;
    }

    /// Drops entries strictly older than t.
    void discard_before(double t) {
        while (!entries_.empty() && entries_.front().t < t) {
            entries_.pop_front();
        }
    }

private:
    std::size_t capacity_;
    double max_age_;
    std::deque<Entry> entries_;
};

/// Fixed transport delay: an item pushed at `arrival` becomes available at
/// arrival + delay. Order is preserved.
template <typename T>
class DelayLine {
public:
    explicit DelayLine(double delay) : delay_(delay) {
        if (!(delay_ >= 0.0)) {
            throw Error("delay must be non-negative");
        }
    }

    void push(double arrival, T value) {
        if (!queue_.empty() && arrival < queue_.back().first - delay_) {
            throw Error("delay line: arrivals must not go back in time");
        }
        double release = arrival + delay_;
        // Rounding must never make the held time shorter than the delay.
        while (release - arrival < delay_) {
            release = std::nextafter(release, std::numeric_limits<double>::infinity());
        }
        queue_.emplace_back(release, std::move(value));
    }

    std::optional<double> next_release() const {
        return queue_.empty() ? std::nullopt : std::optional<double>(queue_.front().first);
    }

    /// Items whose release time is <= now, in push order.
    std::vector<std::pair<double, T>> pop_ready(double now) {
        std::vector<std::pair<double, T>> out;
        while (!queue_.empty() && queue_.front().first <= now) {
            out.push_back(std::move(queue_.front()));
            queue_.pop_front();
        }
        return out;
    }

    bool empty() const { return queue_.empty(); }
    std::size_t size() const { return queue_.size(); }
    double delay() const { return delay_; }

private:
    double delay_;
    std::deque<std::pair<double, T>> queue_;
};

enum class MatchKind { matched, defer, drop };
std::string_view to_string(MatchKind kind);

struct SideMatch {
    MatchKind kind = MatchKind::defer;
    std::optional<std::size_t> index;  // into the buffer, when matched
    double dt = 0.0;                   // t_wrench - t_js
};

/// Nearest-stamp decision for one buffer. A match is committed once no later
/// sample could be closer (exact hit, or newest stamp >= t_js + |dt|). While a
/// closer sample within tol may still arrive the decision is deferred, unless
/// the input has ended. Otherwise the state is dropped.
template <typename T>
SideMatch match_side(double t_js, const TimedBuffer<T>& buffer, double tol, bool ended) {
    if (!(tol >= 0.0)) {
        throw Error("match tolerance must be non-negative");
    }
    const auto best = buffer.nearest(t_js);
    if (!best) {
        return {ended ? MatchKind::drop : MatchKind::defer, std::nullopt, 0.0};
    }
    const double dt = buffer.entries()[*best].t - t_js;
    const double newest = *buffer.newest();
    const bool settled = dt == 0.0 || newest >= t_js + std::abs(dt) || ended;
    if (settled) {
        if (std::abs(dt) <= tol) {
            return {MatchKind::matched, best, dt};
        }
        return {MatchKind::drop, std::nullopt, dt};
    }
    if (newest < t_js + tol) {
        return {MatchKind::defer, std::nullopt, dt};
    }
    return {MatchKind::drop, std::nullopt, dt};
}

/// Combines per-side decisions: any drop drops, else any defer defers.
MatchKind combine(std::initializer_list<MatchKind> kinds);

} // namespace mskrt
