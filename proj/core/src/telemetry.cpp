#include "mskrt/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "mskrt/errors.hpp"

namespace mskrt {

EventId event_from_int(int id) {
    for (EventId e : kAllEvents) {
        if (static_cast<int>(e) == id) {
            return e;
        }
    }
    throw Error("invalid event id " + std::to_string(id));
}

std::string_view describe(EventId id) {
    switch (id) {
    case EventId::joint_angles_produced: return "Joint angles produced";
    case EventId::read_joint_angles: return "Read joint angles from buffer";
    case EventId::found_wrenches: return "Found wrenches in buffer";
    case EventId::before_id: return "Immediately before ID";
    case EventId::torques_calculated: return "Joint torques calculated";
    case EventId::so_received: return "Received synchronized joint angles and torques";
    case EventId::before_so: return "Immediately before SO computation";
    case EventId::activations_calculated: return "Muscle activations calculated";
    }
    return "?";
}

std::optional<double> EventLog::time_of(EventId id) const {
    for (const EventStamp& e : entries_) {
        if (e.id == id) {
            return e.t;
        }
    }
    return std::nullopt;
}

EventLog record_event(EventLog log, EventId id, double now) {
    event_from_int(static_cast<int>(id));
    if (!log.entries_.empty() && static_cast<int>(id) <= static_cast<int>(log.entries_.back().id)) {
        throw Error("event " + std::to_string(static_cast<int>(id)) + " recorded after event " +
                    std::to_string(static_cast<int>(log.entries_.back().id)));
    }
    log.entries_.push_back({id, now});
    return log;
}

std::optional<double> total_latency(const EventLog& log) {
    const auto t0 = log.time_of(EventId::joint_angles_produced);
    const auto t9 = log.time_of(EventId::activations_calculated);
    if (!t0 || !t9) {
        return std::nullopt;
    }
    return *t9 - *t0;
}

std::optional<double> LatencySummary::mean_ms(EventId from, EventId to) const {
    for (const PairMean& p : pairs) {
        if (p.from == from && p.to == to) {
            return p.mean_ms;
        }
    }
    return std::nullopt;
}

LatencySummary summarize(std::span<const EventLog> logs) {
    if (logs.empty()) {
        throw Error("summarize: no event logs");
    }
    // Shifted by the first sample; the result is kept inside [min, max],
    // which rounding alone could otherwise leave.
    struct Acc {
        double first = 0.0, sum = 0.0, lo = 0.0, hi = 0.0;
        std::size_t n = 0;
        void add(double x) {
            if (n == 0) {
                first = lo = hi = x;
            }
            sum += x - first;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
            ++n;
        }
        double mean() const {
            return std::clamp(first + sum / static_cast<double>(n), lo, hi);
        }
    };
    constexpr std::size_t kSlots = std::size(kAllEvents);
    Acc acc[kSlots][kSlots];
    auto slot = [](EventId id) {
        return static_cast<std::size_t>(
            std::find(std::begin(kAllEvents), std::end(kAllEvents), id) - std::begin(kAllEvents));
    };
    Acc total;
    for (const EventLog& log : logs) {
        const auto& e = log.entries();
        for (std::size_t k = 1; k < e.size(); ++k) {
            Acc& a = acc[slot(e[k - 1].id)][slot(e[k].id)];
            a.add(e[k].t - e[k - 1].t);
        }
        if (auto t = total_latency(log)) {
            total.add(*t);
        }
    }
    LatencySummary out;
    for (std::size_t i = 0; i < kSlots; ++i) {
        for (std::size_t j = i + 1; j < kSlots; ++j) {
            if (acc[i][j].n > 0) {
                out.pairs.push_back({kAllEvents[i], kAllEvents[j],
                                     1e3 * acc[i][j].mean(),
                                     acc[i][j].n});
            }
        }
    }
    if (total.n > 0) {
        out.total_mean_ms = 1e3 * total.mean();
    }
    out.total_count = total.n;
    return out;
}

double ecdf_quantile(std::span<const double> samples, double p, std::size_t bins) {
    if (samples.empty()) {
        throw Error("ecdf_quantile: no samples");
    }
    if (!(p > 0.0 && p < 1.0)) {
        throw Error("ecdf_quantile: p must lie in (0, 1)");
    }
    if (bins == 0) {
        throw Error("ecdf_quantile: bins must be positive");
    }
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) {
        return lo;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (double x : samples) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        counts[std::min(b, bins - 1)] += 1;
    }
    const double target = p * static_cast<double>(samples.size());
    std::size_t cumulative = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        cumulative += counts[b];
        if (static_cast<double>(cumulative) >= target) {
            return lo + width * static_cast<double>(b);
        }
    }
    return lo + width * static_cast<double>(bins - 1);
}

double on_time_rate(std::span<const Delivery> deliveries, double deadline) {
    if (!(deadline > 0.0)) {
        throw Error("on_time_rate: deadline must be positive");
    }
    if (deliveries.empty()) {
        return 0.0;
    }
    std::size_t on_time = 0;
    for (const Delivery& d : deliveries) {
        if (d.discarded) {
            continue;
        }
        if (auto t = total_latency(d.log); t && *t <= deadline) {
            ++on_time;
        }
    }
    return static_cast<double>(on_time) / static_cast<double>(deliveries.size());
}

double on_time_rate(std::span<const EventLog> logs, double deadline) {
    std::vector<Delivery> d;
    d.reserve(logs.size());
    for (const EventLog& l : logs) {
        d.push_back({l, false});
    }
    return on_time_rate(d, deadline);
}

LatencyReport make_report(std::span<const Delivery> deliveries, std::size_t n_workers,
                          double deadline_s) {
    LatencyReport r;
    r.n_workers = n_workers;
    r.deadline_s = deadline_s;
    r.samples = deliveries.size();
    if (deliveries.empty()) {
        return r;
    }
    std::vector<EventLog> logs;
    std::vector<double> totals;
    logs.reserve(deliveries.size());
    for (const Delivery& d : deliveries) {
        logs.push_back(d.log);
        if (auto t = total_latency(d.log)) {
            totals.push_back(*t);
        }
    }
    r.summary = summarize(logs);
    if (!totals.empty()) {
        r.p95_ms = 1e3 * ecdf_quantile(totals, 0.95);
    }
    r.on_time = on_time_rate(deliveries, deadline_s);
    return r;
}

namespace {

struct Row {
    std::string label;
    std::string end_event;
    std::string reference_event;
    std::optional<EventId> from;
    std::optional<EventId> to;
};

std::vector<Row> table_rows() {
    auto pair = [](EventId a, EventId b) {
        return Row{std::to_string(static_cast<int>(a)) + "-" + std::to_string(static_cast<int>(b)),
                   std::string(describe(b)), std::string(describe(a)), a, b};
    };
    return {
        pair(EventId::joint_angles_produced, EventId::read_joint_angles),
        pair(EventId::before_id, EventId::torques_calculated),
        pair(EventId::torques_calculated, EventId::so_received),
        pair(EventId::so_received, EventId::before_so),
        pair(EventId::before_so, EventId::activations_calculated),
        Row{"All", "all", "", std::nullopt, std::nullopt},
        Row{"95% Latency", "all", "", std::nullopt, std::nullopt},
    };
}

std::optional<double> row_value(const Row& row, const LatencyReport& r) {
    if (row.from) {
        return r.summary.mean_ms(*row.from, *row.to);
    }
    if (row.label == "All") {
        return r.summary.total_mean_ms;
    }
    return r.p95_ms;
}

std::string fixed(std::optional<double> v, int digits) {
    if (!v) {
        return "-";
    }
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << *v;
    return os.str();
}

} // namespace

std::string format_report_table(std::span<const LatencyReport> reports) {
    std::ostringstream os;
    os << "Mean latency with N processes (ms)\n";
    os << std::left << std::setw(13) << "Events" << std::setw(48) << "End event" << std::setw(48)
       << "Reference event";
    for (const auto& r : reports) {
        os << std::right << std::setw(12) << ("N = " + std::to_string(r.n_workers));
    }
    os << "\n";
    for (const Row& row : table_rows()) {
        os << std::left << std::setw(13) << row.label << std::setw(48) << row.end_event
           << std::setw(48) << row.reference_event;
        for (const auto& r : reports) {
            os << std::right << std::setw(12) << fixed(row_value(row, r), row.from ? 6 : 3);
        }
        os << "\n";
    }
    os << std::left << std::setw(109) << "On-time delivery rate";
    for (const auto& r : reports) {
        os << std::right << std::setw(12) << fixed(100.0 * r.on_time, 2) + "%";
    }
    os << "\n" << std::left << std::setw(109) << "Deadline (s)";
    for (const auto& r : reports) {
        os << std::right << std::setw(12) << fixed(r.deadline_s, 3);
    }
    os << "\n" << std::left << std::setw(109) << "Samples";
    for (const auto& r : reports) {
        os << std::right << std::setw(12) << r.samples;
    }
    os << "\n";
    return os.str();
}

std::string format_report_csv(std::span<const LatencyReport> reports) {
    std::ostringstream os;
    os << "row";
    for (const auto& r : reports) {
        os << ",N=" << r.n_workers;
    }
    os << "\n";
    for (const Row& row : table_rows()) {
        os << row.label;
        for (const auto& r : reports) {
            os << "," << fixed(row_value(row, r), 6);
        }
        os << "\n";
    }
    os << "on_time_rate";
    for (const auto& r : reports) {
        os << "," << fixed(r.on_time, 6);
    }
    os << "\n";
    return os.str();
}

} // namespace mskrt
