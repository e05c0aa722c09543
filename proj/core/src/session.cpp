#include "mskrt/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "mskrt/errors.hpp"
#include "mskrt/telemetry.hpp"

namespace mskrt {

std::string_view to_string(Side side) {
    return side == Side::left ? "left" : "right";
}

Side parse_side(std::string_view text) {
    if (text == "left" || text == "L" || text == "l") {
        return Side::left;
    }
    if (text == "right" || text == "R" || text == "r") {
        return Side::right;
    }
    throw ParseError("unknown insole side '" + std::string(text) + "'");
}

double Session::duration() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto see = [&](double t) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    };
    for (const auto& f : orientations) see(f.t);
    for (const auto& b : bursts) see(b.arrival_t);
    for (const auto& r : refq) see(r.t);
    for (const auto& r : reftau) see(r.t);
    if (sync) see(sync->t);
    return hi >= lo ? hi - lo : 0.0;
}

namespace {

class LineReader {
public:
    LineReader(std::string_view origin, std::size_t line, const std::string& text)
        : origin_(origin), line_(line), in_(text) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(std::string(origin_) + ":" + std::to_string(line_) + ": " + what);
    }

    std::string word(const char* what) {
        std::string w;
        if (!(in_ >> w)) {
            fail(std::string("missing ") + what);
        }
        return w;
    }

    double number(const char* what) {
        const std::string w = word(what);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(w, &used);
        } catch (const std::exception&) {
            fail(std::string("invalid ") + what + " '" + w + "'");
        }
        if (used != w.size() || !std::isfinite(v)) {
            fail(std::string("invalid ") + what + " '" + w + "'");
        }
        return v;
    }

    std::int64_t integer(const char* what) {
        const std::string w = word(what);
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(w, &used);
        } catch (const std::exception&) {
            fail(std::string("invalid ") + what + " '" + w + "'");
        }
        if (used != w.size()) {
            fail(std::string("invalid ") + what + " '" + w + "'");
        }
        return v;
    }

    bool at_end() {
        in_ >> std::ws;
        return in_.eof();
    }

    void finish() {
        if (!at_end()) {
            fail("trailing fields");
        }
    }

private:
    std::string_view origin_;
    std::size_t line_;
    std::istringstream in_;
};

void check_order(LineReader& r, double& last, double t, const char* channel) {
    if (t < last) {
        r.fail(std::string("non-monotonic stamp in channel '") + channel + "'");
    }
    last = t;
}

} // namespace

Session parse_session(std::istream& in, std::string_view origin) {
    Session s;
    double last_orient = -std::numeric_limits<double>::infinity();
    double last_insole = last_orient, last_refq = last_orient, last_reftau = last_orient;
    // Grouping only joins directly consecutive lines of one channel.
    enum class Prev { none, orient, insole, other } prev = Prev::none;

    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        const auto first = text.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        if (text[first] == '#') {
            std::istringstream hdr(text.substr(first + 1));
            std::string key;
            if (hdr >> key && key == "coordinates") {
                s.reference_names.clear();
                for (std::string n; hdr >> n;) {
                    s.reference_names.push_back(n);
                }
            }
            continue;
        }
        if (const auto hash = text.find('#'); hash != std::string::npos) {
            text.erase(hash);
        }
        LineReader r(origin, line_no, text);
        const std::string channel = r.word("channel");
        const double t = r.number("stamp");
        if (channel == "orient") {
            check_order(r, last_orient, t, "orient");
            OrientationSample o;
            o.t = t;
            o.frame = r.word("frame name");
            const double w = r.number("w"), x = r.number("x"), y = r.number("y"),
                         z = r.number("z");
            r.finish();
            o.quat = Quat(w, x, y, z);
            if (std::abs(o.quat.norm() - 1.0) > 1e-6) {
                r.fail("orientation quaternion is not unit norm");
            }
            if (prev != Prev::orient || s.orientations.back().t != t) {
                s.orientations.push_back({t, {}});
            }
            for (const auto& existing : s.orientations.back().samples) {
                if (existing.frame == o.frame) {
                    r.fail("frame '" + o.frame + "' repeated within one stamp");
                }
            }
            s.orientations.back().samples.push_back(std::move(o));
            prev = Prev::orient;
        } else if (channel == "insole") {
            check_order(r, last_insole, t, "insole");
            InsoleRecord rec;
            try {
                rec.side = parse_side(r.word("side"));
            } catch (const ParseError& e) {
                r.fail(e.what());
            }
            rec.tick = r.integer("tick");
            rec.normal_force = r.number("force");
            rec.cop_x = r.number("cop_x");
            rec.cop_y = r.number("cop_y");
            r.finish();
            if (prev != Prev::insole || s.bursts.back().arrival_t != t) {
                s.bursts.push_back({t, {}});
            }
            s.bursts.back().records.push_back(rec);
            prev = Prev::insole;
        } else if (channel == "sync") {
            if (s.sync) {
                r.fail("more than one sync record");
            }
            SyncRecord sr;
            sr.t = t;
            sr.left_tick = r.integer("left tick");
            sr.right_tick = r.integer("right tick");
            r.finish();
            s.sync = sr;
            prev = Prev::other;
        } else if (channel == "refq" || channel == "reftau") {
            const bool is_q = channel == "refq";
            check_order(r, is_q ? last_refq : last_reftau, t, channel.c_str());
            ReferenceRow row;
            row.t = t;
            while (!r.at_end()) {
                row.values.push_back(r.number("value"));
            }
            auto& rows = is_q ? s.refq : s.reftau;
            if (!rows.empty() && rows.front().values.size() != row.values.size()) {
                r.fail("inconsistent " + channel + " width");
            }
            rows.push_back(std::move(row));
            prev = Prev::other;
        } else {
            r.fail("unknown channel '" + channel + "'");
        }
    }
    return s;
}

Session load_session(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open session file '" + path.string() + "'");
    }
    return parse_session(in, path.string());
}

void write_session(std::ostream& out, const Session& s) {
    out << std::setprecision(17);
    if (!s.reference_names.empty()) {
        out << "# coordinates";
        for (const auto& n : s.reference_names) {
            out << ' ' << n;
        }
        out << '\n';
    }
    for (const PlaybackEvent& e : playback_schedule(s)) {
        switch (e.kind) {
        case PlaybackEvent::Kind::sync:
            out << "sync " << s.sync->t << ' ' << s.sync->left_tick << ' ' << s.sync->right_tick
                << '\n';
            break;
        case PlaybackEvent::Kind::insole:
            for (const auto& rec : s.bursts[e.index].records) {
                out << "insole " << e.t << ' ' << to_string(rec.side) << ' ' << rec.tick << ' '
                    << rec.normal_force << ' ' << rec.cop_x << ' ' << rec.cop_y << '\n';
            }
            break;
        case PlaybackEvent::Kind::orientation:
            for (const auto& o : s.orientations[e.index].samples) {
                out << "orient " << e.t << ' ' << o.frame << ' ' << o.quat.w() << ' ' << o.quat.x()
                    << ' ' << o.quat.y() << ' ' << o.quat.z() << '\n';
            }
            break;
        case PlaybackEvent::Kind::refq:
        case PlaybackEvent::Kind::reftau: {
            const bool is_q = e.kind == PlaybackEvent::Kind::refq;
            const ReferenceRow& row = (is_q ? s.refq : s.reftau)[e.index];
            out << (is_q ? "refq " : "reftau ") << row.t;
            for (double v : row.values) {
                out << ' ' << v;
            }
            out << '\n';
            break;
        }
        }
    }
}

void save_session(const std::filesystem::path& path, const Session& session) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write session file '" + path.string() + "'");
    }
    write_session(out, session);
}

std::vector<PlaybackEvent> playback_schedule(const Session& s) {
    using K = PlaybackEvent::Kind;
    std::vector<PlaybackEvent> events;
    events.reserve(s.orientations.size() + s.bursts.size() + s.refq.size() + s.reftau.size() + 1);
    if (s.sync) {
        events.push_back({K::sync, s.sync->t, 0});
    }
    for (std::size_t i = 0; i < s.bursts.size(); ++i) {
        events.push_back({K::insole, s.bursts[i].arrival_t, i});
    }
    for (std::size_t i = 0; i < s.orientations.size(); ++i) {
        events.push_back({K::orientation, s.orientations[i].t, i});
    }
    for (std::size_t i = 0; i < s.refq.size(); ++i) {
        events.push_back({K::refq, s.refq[i].t, i});
    }
    for (std::size_t i = 0; i < s.reftau.size(); ++i) {
        events.push_back({K::reftau, s.reftau[i].t, i});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const PlaybackEvent& a, const PlaybackEvent& b) { return a.t < b.t; });
    return events;
}

void playback(const Session& session, PlaybackMode mode,
              const std::function<void(const PlaybackEvent&)>& sink) {
    const auto events = playback_schedule(session);
    if (events.empty()) {
        return;
    }
    const double t_start = events.front().t;
    const SteadyClock clock;
    for (const PlaybackEvent& e : events) {
        if (mode == PlaybackMode::realtime) {
            std::this_thread::sleep_until(clock.at(e.t - t_start));
        }
        sink(e);
    }
}

} // namespace mskrt
