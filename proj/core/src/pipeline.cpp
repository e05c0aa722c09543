#include "mskrt/pipeline.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mskrt/errors.hpp"
#include "mskrt/id.hpp"
#include "mskrt/ik.hpp"
#include "mskrt/streams.hpp"
#include "mskrt/sync.hpp"

namespace mskrt {

namespace {

std::vector<double> to_row(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

class Runner {
public:
    Runner(const PipelineConfig& config, const ChainModel& model, const Session& session,
           std::optional<CalibrationSet> calibration, const RunHooks& hooks)
        : cfg_(config),
          model_(model),
          session_(session),
          delay_(config.sync.delay_s),
          left_filter_(config.insole_filter, 3),
          right_filter_(config.insole_filter, 3) {
        cfg_.validate();
        for (const InsoleSetup* s : {&cfg_.insole.left, &cfg_.insole.right}) {
            model_.segment_index(s->body);
        }
        const auto names = model_.coordinate_names();
        result_.q.channels = names;
        result_.tau.channels = names;
        for (const auto& m : model_.muscles()) result_.act.channels.push_back(m.name);
        for (const auto& n : names) result_.act.channels.push_back("residual_" + n);

        if (calibration) {
            start_tracker(std::move(*calibration));
        }
        if (session_.sync) {
            demux_.emplace(sync_from_record(*session_.sync, cfg_.insole.rate));
        }

        SoEngineConfig so;
        so.workers = cfg_.so.workers;
        so.deadline_s = cfg_.so.deadline_s;
        so.options = cfg_.so.options;
        so.virtual_cost_s = cfg_.so.virtual_cost_s;
        so.extra_delay = hooks.extra_delay;
        auto sink = [this](const ActivationResult& r, bool discarded) { on_result(r, discarded); };
        if (cfg_.mode == PlaybackMode::logical) {
            logical_ = std::make_unique<LogicalSoEngine>(so, sink);
            clock_ = &vclock_;
        } else {
            threaded_ = std::make_unique<ThreadedSoEngine>(so, steady_, sink);
            clock_ = &steady_;
        }
    }

    RunResult run() {
        const auto schedule = playback_schedule(session_);
        std::size_t next = 0;
        bool insole_ended = false;
        for (;;) {
            std::optional<double> due;
            if (next < schedule.size()) due = schedule[next].t;
            if (auto r = delay_.next_release()) due = due ? std::min(*due, *r) : *r;
            if (!due) break;
            const double now = wait_until(*due);
            if (logical_) logical_->advance(now);

            while (next < schedule.size() && schedule[next].t <= now) {
                handle(schedule[next++]);
            }
            if (!insole_ended && next == schedule.size()) {
                insole_ended = true;
                flush_insoles();
            }
            for (auto& [release, js] : delay_.pop_ready(now)) {
                js.events = record_event(std::move(js.events), EventId::read_joint_angles, clock_->now());
                awaiting_.push_back(std::move(js));
            }
            match(insole_ended);
        }
        match(true);

        if (logical_) {
            logical_->finish();
            result_.assignments = logical_->assignments();
        } else {
            threaded_->finish();
            result_.assignments = threaded_->assignments();
        }
        finalize();
        return std::move(result_);
    }

private:
    double wait_until(double t) {
        if (cfg_.mode == PlaybackMode::logical) {
            vclock_.set(std::max(t, vclock_.now()));
            return vclock_.now();
        }
        std::this_thread::sleep_until(steady_.at(t));
        return steady_.now();
    }

    void start_tracker(CalibrationSet calib) {
        result_.calibration = calib;
        tracker_.emplace(model_, std::move(calib), cfg_.ik_filter, cfg_.ik, model_.default_pose());
    }

    void handle(const PlaybackEvent& ev) {
        switch (ev.kind) {
        case PlaybackEvent::Kind::orientation:
            on_frame(session_.orientations[ev.index]);
            break;
        case PlaybackEvent::Kind::insole:
            on_burst(session_.bursts[ev.index]);
            break;
        case PlaybackEvent::Kind::sync:
            if (!demux_) {
                demux_.emplace(sync_from_record(*session_.sync, cfg_.insole.rate));
            }
            break;
        case PlaybackEvent::Kind::refq:
        case PlaybackEvent::Kind::reftau:
            break;
        }
    }

    void on_frame(const OrientationFrame& frame) {
        ++result_.counters.frames;
        if (!tracker_) {
            for (const auto& s : frame.samples) calib_frames_[s.frame].push_back(s);
            ++result_.counters.calibration_frames;
            if (result_.counters.calibration_frames >= cfg_.calibrate.frames) {
                result_.calibrated_online = true;
                start_tracker(calibrate(model_, model_.default_pose(), calib_frames_, cfg_.calibrate));
            }
            return;
        }
        const std::size_t before = tracker_->unconverged();
        auto js = tracker_->push(frame, clock_->now());
        result_.counters.ik_unconverged += tracker_->unconverged() - before;
        if (!js) return;
        ++result_.counters.states;
        result_.q.append(js->t, to_row(js->q));
        delay_.push(clock_->now(), std::move(*js));
    }

    void on_burst(const InsoleBurst& burst) {
        if (!demux_) {
            held_.push_back(burst);
            if (auto sync = sync_from_burst(burst, cfg_.insole.rate)) {
                demux_.emplace(*sync);
                for (const auto& b : held_) feed(demux_->push(b));
                held_.clear();
            }
            return;
        }
        feed(demux_->push(burst));
    }

    void flush_insoles() {
        if (demux_) {
            feed(demux_->flush());
            for (const auto& d : demux_->drops()) {
                result_.discards.push_back(
                    {"demux", demux_->sync().stamp(d.side, d.tick),
                     std::string(to_string(d.side)) + " tick " + std::to_string(d.tick) +
                         (d.reason == DemuxDrop::Reason::late ? " late" : " duplicate")});
            }
            result_.counters.demux_dropped = demux_->drops().size();
        }
    }

    void feed(const std::vector<InsoleSample>& samples) {
        for (const auto& s : samples) {
            SlidingSplineFilter& f = s.side == Side::left ? left_filter_ : right_filter_;
            auto& ticks = s.side == Side::left ? left_ticks_ : right_ticks_;
            ticks.push_back(s.tick);
            if (ticks.size() > cfg_.insole_filter.window) ticks.pop_front();
            auto out = f.push(s.t, Eigen::Vector3d(s.normal_force, s.cop.x(), s.cop.y()));
            if (!out) continue;
            InsoleSample filtered;
            filtered.t = out->t;
            filtered.side = s.side;
            filtered.tick = ticks[ticks.size() - 1 - cfg_.insole_filter.delay];
            filtered.normal_force = std::max(0.0, out->value[0]);
            filtered.cop = Eigen::Vector2d(out->value[1], out->value[2]);
            (s.side == Side::left ? left_buf_ : right_buf_).push(filtered.t, filtered);
        }
    }

    void match(bool ended) {
        while (!awaiting_.empty()) {
            JointState& js = awaiting_.front();
            const SideMatch l = match_side(js.t, left_buf_, cfg_.sync.tol_s, ended);
            const SideMatch r = match_side(js.t, right_buf_, cfg_.sync.tol_s, ended);
            const MatchKind kind = combine({l.kind, r.kind});
            if (kind == MatchKind::defer) return;
            if (kind == MatchKind::drop) {
                ++result_.counters.sync_dropped;
                std::ostringstream why;
                why << "no insole pair within tolerance (left "
                    << (l.kind == MatchKind::drop ? "missing" : "ok") << ", right "
                    << (r.kind == MatchKind::drop ? "missing" : "ok") << ")";
                result_.discards.push_back({"sync", js.t, why.str()});
                awaiting_.pop_front();
                continue;
            }
            JointState state = std::move(js);
            awaiting_.pop_front();
            process(std::move(state), left_buf_.entries()[*l.index].value,
                    right_buf_.entries()[*r.index].value);
        }
    }

    void process(JointState js, const InsoleSample& left, const InsoleSample& right) {
        ++result_.counters.matched;
        js.events = record_event(std::move(js.events), EventId::found_wrenches, clock_->now());
        const TransformSet tf = broadcast_transforms(model_, js);
        std::vector<ExternalWrench> wrenches;
        for (const InsoleSample* s : {&left, &right}) {
            const InsoleSetup& setup = cfg_.insole.setup(s->side);
            const auto frame = model_.mapping().pairs().empty()
                                   ? std::optional<std::string>(setup.body)
                                   : model_.mapping().frame_for(setup.body);
            const auto pose = frame ? tf.transforms.find(*frame) : tf.transforms.end();
            if (pose == tf.transforms.end()) {
                throw ValidationError(setup.body, "no published transform for the insole body");
            }
            ExternalWrench w = build_wrench(*s, transform_cop(*s, pose->second, setup.mount),
                                            setup.body, cfg_.insole.activation_threshold);
            w.t = js.t;
            wrenches.push_back(std::move(w));
        }
        TorqueState ts = inverse_dynamics(model_, js, wrenches, clock_);
        result_.tau.append(ts.t, to_row(ts.tau));

        SoJob job;
        job.index = next_index_++;
        job.t = ts.t;
        job.problem = make_problem(model_, ts.state.q, ts.tau, cfg_.so.residual_weight);
        job.events = std::move(ts.events);
        if (logical_) {
            logical_->submit(std::move(job), vclock_.now());
        } else {
            threaded_->submit(std::move(job));
        }
    }

    void on_result(const ActivationResult& r, bool discarded) {
        std::lock_guard lock(sink_mutex_);
        collected_.push_back({r.index, r.t, Delivery{r.events, discarded}});
        RunCounters& c = result_.counters;
        ++c.so_received;
        if (!r.converged) {
            ++c.so_unconverged;
        } else {
            c.max_kkt = std::max(c.max_kkt, r.kkt);
        }
        if (discarded) {
            ++c.so_discarded;
            so_discards_.push_back({"so", r.t,
                                    "message " + std::to_string(r.index) +
                                        " past deadline or out of order"});
            return;
        }
        ++c.so_emitted;
        if (r.a.size() > 0) {
            c.max_activation = std::max(c.max_activation, r.a.maxCoeff());
            c.min_activation = c.so_emitted == 1 ? r.a.minCoeff() : std::min(c.min_activation, r.a.minCoeff());
        }
        std::vector<double> row = to_row(r.a);
        row.insert(row.end(), r.residuals.data(), r.residuals.data() + r.residuals.size());
        result_.act.append(r.t, std::move(row));
    }

    void finalize() {
        std::sort(collected_.begin(), collected_.end(),
                  [](const Collected& a, const Collected& b) { return a.index < b.index; });
        for (auto& c : collected_) {
            result_.deliveries_index.push_back(c.index);
            result_.deliveries.push_back(std::move(c.delivery));
        }
        if (!result_.deliveries.empty()) {
            result_.report = make_report(result_.deliveries, cfg_.so.workers, cfg_.so.deadline_s);
        } else {
            result_.report.n_workers = cfg_.so.workers;
            result_.report.deadline_s = cfg_.so.deadline_s;
        }
        result_.discards.insert(result_.discards.end(), so_discards_.begin(), so_discards_.end());
        std::stable_sort(result_.discards.begin(), result_.discards.end(),
                         [](const DiscardRecord& a, const DiscardRecord& b) { return a.t < b.t; });
    }

    struct Collected {
        std::size_t index;
        double t;
        Delivery delivery;
    };

    PipelineConfig cfg_;
    const ChainModel& model_;
    const Session& session_;

    VirtualClock vclock_;
    SteadyClock steady_;
    const Clock* clock_ = nullptr;

    std::optional<Tracker> tracker_;
    std::map<std::string, std::vector<OrientationSample>> calib_frames_;
    DelayLine<JointState> delay_;
    std::deque<JointState> awaiting_;

    std::optional<InsoleDemux> demux_;
    std::vector<InsoleBurst> held_;
    SlidingSplineFilter left_filter_, right_filter_;
    std::deque<std::int64_t> left_ticks_, right_ticks_;
    TimedBuffer<InsoleSample> left_buf_, right_buf_;

    std::unique_ptr<LogicalSoEngine> logical_;
    std::unique_ptr<ThreadedSoEngine> threaded_;
    std::size_t next_index_ = 0;

    std::mutex sink_mutex_;
    std::vector<Collected> collected_;
    std::vector<DiscardRecord> so_discards_;
    RunResult result_;
};

std::string stamp_cell(const EventLog& log, EventId id) {
    const auto t = log.time_of(id);
    if (!t) return {};
    std::ostringstream s;
    s << std::setprecision(12) << *t;
    return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << text;
}

} // namespace

RunResult run_pipeline(const PipelineConfig& config, const ChainModel& model,
                       const Session& session, std::optional<CalibrationSet> calibration,
                       const RunHooks& hooks) {
    Runner runner(config, model, session, std::move(calibration), hooks);
    return runner.run();
}

RunResult run_pipeline(const PipelineConfig& config, const RunHooks& hooks) {
    config.check_files();
    const ChainModel model = load_model(config.model);
    const Session session = load_session(config.session);
    std::optional<CalibrationSet> calib;
    if (config.calibration) calib = load_calibration(*config.calibration);
    return run_pipeline(config, model, session, std::move(calib), hooks);
}

void write_outputs(const std::filesystem::path& dir, const PipelineConfig& config,
                   const RunResult& r) {
    std::filesystem::create_directories(dir);
    write_csv(dir / "q.csv", r.q);
    write_csv(dir / "tau.csv", r.tau);
    write_csv(dir / "act.csv", r.act);

    std::ostringstream events;
    events << "index,worker,discarded";
    for (EventId id : kAllEvents) events << ",e" << static_cast<int>(id);
    events << '\n';
    for (std::size_t i = 0; i < r.deliveries.size(); ++i) {
        const std::size_t index = r.deliveries_index[i];
        events << index << ','
               << (index < r.assignments.size() ? std::to_string(r.assignments[index]) : "")
               << ',' << (r.deliveries[i].discarded ? 1 : 0);
        for (EventId id : kAllEvents) events << ',' << stamp_cell(r.deliveries[i].log, id);
        events << '\n';
    }
    write_text(dir / "events.csv", events.str());

    std::ostringstream discards;
    discards << "stage,t,reason\n" << std::setprecision(12);
    for (const auto& d : r.discards) discards << d.stage << ',' << d.t << ',' << d.reason << '\n';
    write_text(dir / "discards.csv", discards.str());

    const LatencyReport reports[] = {r.report};
    write_text(dir / "latency_report.txt", format_report_table(reports));
    write_text(dir / "latency_report.csv", format_report_csv(reports));

    const RunCounters& c = r.counters;
    nlohmann::ordered_json meta;
    meta["mode"] = config.mode == PlaybackMode::logical ? "logical" : "realtime";
    meta["workers"] = config.so.workers;
    meta["deadline_s"] = config.so.deadline_s;
    meta["sync_delay_s"] = config.sync.delay_s;
    meta["calibrated_online"] = r.calibrated_online;
    meta["frames"] = c.frames;
    meta["calibration_frames"] = c.calibration_frames;
    meta["states"] = c.states;
    meta["ik_unconverged"] = c.ik_unconverged;
    meta["matched"] = c.matched;
    meta["sync_dropped"] = c.sync_dropped;
    meta["demux_dropped"] = c.demux_dropped;
    meta["so_received"] = c.so_received;
    meta["so_emitted"] = c.so_emitted;
    meta["so_discarded"] = c.so_discarded;
    meta["so_unconverged"] = c.so_unconverged;
    meta["max_kkt"] = c.max_kkt;
    meta["on_time_rate"] = r.report.on_time;
    write_text(dir / "run.json", meta.dump(2) + "\n");

    if (r.calibrated_online) {
        save_calibration(dir / "calibration.json", r.calibration);
    }
}

LatencyReport report_from_dir(const std::filesystem::path& dir) {
    std::ifstream meta_in(dir / "run.json");
    if (!meta_in) {
        throw Error("no run.json in '" + dir.string() + "'");
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("run.json: ") + e.what());
    }
    const std::size_t workers = meta.value("workers", std::size_t{0});
    const double deadline = meta.value("deadline_s", 0.5);

    std::ifstream in(dir / "events.csv");
    if (!in) {
        throw Error("no events.csv in '" + dir.string() + "'");
    }
    std::string line;
    std::getline(in, line);
    std::vector<Delivery> deliveries;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream row(line);
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != 3 + std::size(kAllEvents)) {
            throw ParseError("events.csv:" + std::to_string(line_no) + ": wrong column count");
        }
        Delivery d;
        d.discarded = cells[2] == "1";
        for (std::size_t k = 0; k < std::size(kAllEvents); ++k) {
            const std::string& v = cells[3 + k];
            if (v.empty()) continue;
            try {
                d.log = record_event(std::move(d.log), kAllEvents[k], std::stod(v));
            } catch (const std::invalid_argument&) {
                throw ParseError("events.csv:" + std::to_string(line_no) + ": bad stamp '" + v + "'");
            }
        }
        deliveries.push_back(std::move(d));
    }
    if (deliveries.empty()) {
        throw Error("events.csv holds no messages");
    }
    return make_report(deliveries, workers, deadline);
}

} // namespace mskrt
