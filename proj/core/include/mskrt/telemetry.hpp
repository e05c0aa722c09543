#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mskrt {

/// Critical-path events. Ids 2 and 4 (signal filtering inside ID) do not
/// exist on this path because both inputs arrive already filtered.
enum class EventId : int {
    joint_angles_produced = 0,
    read_joint_angles = 1,
    found_wrenches = 3,
    before_id = 5,
    torques_calculated = 6,
    so_received = 7,
    before_so = 8,
    activations_calculated = 9,
};

inline constexpr EventId kAllEvents[] = {
    EventId::joint_angles_produced, EventId::read_joint_angles, EventId::found_wrenches,
    EventId::before_id,             EventId::torques_calculated, EventId::so_received,
    EventId::before_so,             EventId::activations_calculated,
};

/// Throws Error for ids outside {0,1,3,5,6,7,8,9}.
EventId event_from_int(int id);
std::string_view describe(EventId id);

struct EventStamp {
    EventId id;
    double t;  // s, monotonic clock domain of the run
};

class EventLog {
public:
    const std::vector<EventStamp>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    std::optional<double> time_of(EventId id) const;
    bool contains(EventId id) const { return time_of(id).has_value(); }

private:
    friend EventLog record_event(EventLog log, EventId id, double now);
    std::vector<EventStamp> entries_;
};

/// Returns `log` with (id, now) appended. Throws Error if id is not greater
/// than the last recorded id.
[[nodiscard]] EventLog record_event(EventLog log, EventId id, double now);

/// End-to-end latency (event 9 minus event 0), s.
std::optional<double> total_latency(const EventLog& log);

struct PairMean {
    EventId from;
    EventId to;
    double mean_ms = 0.0;
    std::size_t count = 0;
};

struct LatencySummary {
    std::vector<PairMean> pairs;  // adjacent recorded pairs, in event order
    std::optional<double> total_mean_ms;
    std::size_t total_count = 0;

    std::optional<double> mean_ms(EventId from, EventId to) const;
};

/// Mean duration of every adjacent recorded event pair and of 0 -> 9. Throws
/// Error on an empty input.
LatencySummary summarize(std::span<const EventLog> logs);

/// Histogram-based ECDF quantile: `bins` equal bins over [min, max]; returns
/// the lower edge of the first bin whose cumulative count reaches p * n.
double ecdf_quantile(std::span<const double> samples, double p, std::size_t bins = 1000);

struct Delivery {
    EventLog log;
    bool discarded = false;
};

/// Fraction of deliveries whose 0 -> 9 latency is within `deadline`.
/// Discarded deliveries and logs missing either endpoint count as late.
double on_time_rate(std::span<const Delivery> deliveries, double deadline);
double on_time_rate(std::span<const EventLog> logs, double deadline);

struct LatencyReport {
    std::size_t n_workers = 0;
    double deadline_s = 0.0;
    std::size_t samples = 0;
    LatencySummary summary;
    std::optional<double> p95_ms;
    double on_time = 0.0;
};

LatencyReport make_report(std::span<const Delivery> deliveries, std::size_t n_workers,
                          double deadline_s);

/// Plain-text table, one column per report: rows 0-1, 5-6, 6-7, 7-8, 8-9,
/// All, 95% Latency, followed by the on-time delivery rate.
std::string format_report_table(std::span<const LatencyReport> reports);
/// Same rows as CSV (`row,N=4,N=6,...`).
std::string format_report_csv(std::span<const LatencyReport> reports);

class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() const = 0;
};

/// Seconds since construction on std::chrono::steady_clock.
class SteadyClock final : public Clock {
public:
    SteadyClock() : start_(std::chrono::steady_clock::now()) {}
    double now() const override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    std::chrono::steady_clock::time_point start() const { return start_; }
    std::chrono::steady_clock::time_point at(double t) const {
        return start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(t));
    }

private:
    std::chrono::steady_clock::time_point start_;
};

/// Manually advanced clock for logical (replay) mode.
class VirtualClock final : public Clock {
public:
    double now() const override { return now_; }
    void set(double t) { now_ = t; }

private:
    double now_ = 0.0;
};

} // namespace mskrt
