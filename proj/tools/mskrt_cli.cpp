#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mskrt/analysis.hpp"
#include "mskrt/config.hpp"
#include "mskrt/csv.hpp"
#include "mskrt/errors.hpp"
#include "mskrt/pipeline.hpp"
#include "mskrt/session.hpp"
#include "mskrt/streams.hpp"
#include "mskrt/synth.hpp"
#include "mskrt/telemetry.hpp"

namespace fs = std::filesystem;
using namespace mskrt;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct RunArgs {
    std::string config;
    std::string output;
    std::string mode;
    std::size_t workers = 0;
    bool quiet = false;
};

int cmd_run(const RunArgs& a) {
    PipelineConfig cfg = load_config(a.config);
    if (!a.output.empty()) cfg.output_dir = a.output;
    if (a.mode == "logical") cfg.mode = PlaybackMode::logical;
    if (a.mode == "realtime") cfg.mode = PlaybackMode::realtime;
    if (a.workers > 0) cfg.so.workers = a.workers;
    cfg.check_files();

    const RunResult r = run_pipeline(cfg);
    write_outputs(cfg.output_dir, cfg, r);
    if (!a.quiet) {
        const RunCounters& c = r.counters;
        std::cout << "frames " << c.frames << ", states " << c.states << ", matched " << c.matched
                  << ", sync drops " << c.sync_dropped << ", demux drops " << c.demux_dropped
                  << "\nso: received " << c.so_received << ", emitted " << c.so_emitted
                  << ", discarded " << c.so_discarded << ", unconverged " << c.so_unconverged
                  << "\n\n";
        const LatencyReport reports[] = {r.report};
        std::cout << format_report_table(reports);
        std::cout << "outputs in " << cfg.output_dir.string() << "\n";
    }
    return kOk;
}

int cmd_report(const std::vector<std::string>& dirs, bool csv) {
    std::vector<LatencyReport> reports;
    for (const auto& d : dirs) reports.push_back(report_from_dir(d));
    std::cout << (csv ? format_report_csv(reports) : format_report_table(reports));
    return kOk;
}

int cmd_rmse(const std::string& a, const std::string& b, double scale) {
    const auto rows = rmse(read_csv(a), read_csv(b));
    std::cout << "channel,rmse,samples\n" << std::setprecision(9);
    for (const auto& r : rows) {
        std::cout << r.channel << ',' << r.rmse * scale << ',' << r.samples << '\n';
    }
    return kOk;
}

void write_reference(const fs::path& path, const Session& s, const std::vector<ReferenceRow>& rows) {
    CsvTable t;
    t.channels = s.reference_names;
    for (const auto& r : rows) {
        if (t.channels.empty()) {
            for (std::size_t i = 0; i < r.values.size(); ++i) t.channels.push_back("c" + std::to_string(i));
        }
        t.append(r.t, r.values);
    }
    write_csv(path, t);
}

struct RecordArgs {
    std::string model;
    std::string input;
    std::string output;
    std::string motion = "walking";
    double duration = 0.0;
    std::uint64_t seed = 7;
    std::string reference_dir;
};

int cmd_record(const RecordArgs& a) {
    Session session;
    if (!a.input.empty()) {
        session = load_session(a.input);
    } else {
        if (a.model.empty()) throw ConfigError("record: --model is required to synthesize");
        if (a.motion != "walking" && a.motion != "standing") {
            throw ConfigError("record: --motion must be walking or standing");
        }
        const ChainModel model = load_model(a.model);
        SynthOptions o = demo_synth_options(a.motion == "walking" ? SynthOptions::Motion::walking
                                                                  : SynthOptions::Motion::standing);
        if (a.duration > 0.0) {
            o.duration = a.duration;
            if (o.motion == SynthOptions::Motion::standing) o.calibration_s = a.duration;
        }
        o.seed = a.seed;
        session = synthesize_session(model, o).session;
    }
    if (!a.output.empty()) save_session(a.output, session);
    if (!a.reference_dir.empty()) {
        fs::create_directories(a.reference_dir);
        write_reference(fs::path(a.reference_dir) / "refq.csv", session, session.refq);
        write_reference(fs::path(a.reference_dir) / "reftau.csv", session, session.reftau);
    }
    std::cerr << "session: " << session.orientations.size() << " frames, " << session.bursts.size()
              << " insole bursts, " << session.duration() << " s\n";
    return kOk;
}

struct GaitArgs {
    std::string data;
    std::string channel;
    std::string session;
    std::string side = "right";
    double body_weight = 0.0;
    std::vector<double> onsets;
    std::size_t points = 101;
    double scale = 1.0;
};

int cmd_gaitnorm(const GaitArgs& a) {
    const CsvTable table = read_csv(a.data);
    const auto c = table.find(a.channel);
    if (!c) throw ConfigError("gaitnorm: channel '" + a.channel + "' not in " + a.data);
    std::vector<double> onsets = a.onsets;
    if (onsets.empty()) {
        if (a.session.empty() || !(a.body_weight > 0.0)) {
            throw ConfigError("gaitnorm: give --onsets or --session with --body-weight");
        }
        const Session s = load_session(a.session);
        std::optional<SyncEvent> sync;
        if (s.sync) {
            sync = sync_from_record(*s.sync);
        } else {
            for (const auto& b : s.bursts) {
                if ((sync = sync_from_burst(b))) break;
            }
        }
        if (!sync) throw Error("gaitnorm: session has no insole synchronization");
        const DemuxOutput d = demux_restamp(s.bursts, *sync);
        for (const auto& st : segment_steps(d.side(parse_side(a.side)), a.body_weight)) {
            onsets.push_back(st.t_on);
        }
    }
    auto x = table.column(*c);
    for (double& v : x) v *= a.scale;
    const GaitCycles g = gait_normalize(table.t, x, onsets, a.points);
    std::cout << "phase,mean,sd\n" << std::setprecision(9);
    for (std::size_t i = 0; i < a.points; ++i) {
        std::cout << 100.0 * static_cast<double>(i) / static_cast<double>(a.points - 1) << ','
                  << g.mean[i] << ',' << g.sd[i] << '\n';
    }
    std::cerr << g.cycles.size() << " cycles\n";
    return kOk;
}

int cmd_emg(const std::string& path, const EmgOptions& o, const std::string& out) {
    const CsvTable raw = read_csv(path);
    if (raw.t.empty()) throw Error("emg: no samples in " + path);
    CsvTable env;
    env.channels = raw.channels;
    std::vector<std::vector<double>> cols;
    for (std::size_t c = 0; c < raw.channels.size(); ++c) cols.push_back(emg_envelope(raw.column(c), o));
    for (std::size_t i = 0; i < (cols.empty() ? 0 : cols[0].size()); ++i) {
        std::vector<double> row;
        for (const auto& col : cols) row.push_back(col[i]);
        env.append(raw.t[i * o.decimation], std::move(row));
    }
    if (out.empty()) {
        write_csv(std::cout, env);
    } else {
        write_csv(fs::path(out), env);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Real-time musculoskeletal estimation pipeline"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run a session through IK, ID and SO");
    run_cmd->add_option("--config,-c", run.config, "Pipeline config (JSON)")->required();
    run_cmd->add_option("--output,-o", run.output, "Override the output directory");
    run_cmd->add_option("--mode", run.mode, "Override playback mode")
        ->check(CLI::IsMember({"logical", "realtime"}));
    run_cmd->add_option("--workers", run.workers, "Override so.workers")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--quiet,-q", run.quiet, "No summary on stdout");

    std::vector<std::string> report_dirs;
    bool report_csv = false;
    auto* report_cmd = app.add_subcommand("report", "Latency table from run output directories");
    report_cmd->add_option("logdir", report_dirs, "Run output directory (one column each)")
        ->required()
        ->check(CLI::ExistingDirectory);
    report_cmd->add_flag("--csv", report_csv, "Machine-readable output");

    std::string rmse_a, rmse_b;
    double rmse_scale = 1.0;
    bool rmse_degrees = false;
    auto* rmse_cmd = app.add_subcommand("rmse", "Per-channel RMSE of b resampled onto a");
    rmse_cmd->add_option("a", rmse_a)->required()->check(CLI::ExistingFile);
    rmse_cmd->add_option("b", rmse_b)->required()->check(CLI::ExistingFile);
    rmse_cmd->add_option("--scale", rmse_scale, "Multiply results by this factor");
    rmse_cmd->add_flag("--degrees", rmse_degrees, "Report radians as degrees");

    RecordArgs rec;
    auto* rec_cmd = app.add_subcommand("record", "Synthesize a session or convert an existing one");
    rec_cmd->add_option("--model,-m", rec.model, "Model JSON (for synthesis)");
    rec_cmd->add_option("--input,-i", rec.input, "Existing session to convert")->check(CLI::ExistingFile);
    rec_cmd->add_option("--output,-o", rec.output, "Session file to write");
    rec_cmd->add_option("--motion", rec.motion, "walking | standing");
    rec_cmd->add_option("--duration", rec.duration, "Seconds (synthesis)");
    rec_cmd->add_option("--seed", rec.seed, "Transport jitter seed");
    rec_cmd->add_option("--reference-dir", rec.reference_dir, "Write refq.csv and reftau.csv here");

    GaitArgs gait;
    auto* gait_cmd = app.add_subcommand("gaitnorm", "Normalize a channel to 0-100 % gait cycle");
    gait_cmd->add_option("data", gait.data, "CSV with a t column")->required()->check(CLI::ExistingFile);
    gait_cmd->add_option("--channel", gait.channel)->required();
    gait_cmd->add_option("--onsets", gait.onsets, "Cycle onsets, s")->delimiter(',');
    gait_cmd->add_option("--session", gait.session, "Session whose insoles give stance onsets")
        ->check(CLI::ExistingFile);
    gait_cmd->add_option("--side", gait.side)->check(CLI::IsMember({"left", "right"}));
    gait_cmd->add_option("--body-weight", gait.body_weight, "N");
    gait_cmd->add_option("--points", gait.points)->check(CLI::Range(2, 100000));
    gait_cmd->add_option("--scale", gait.scale, "Multiply the channel before normalizing");

    std::string emg_in, emg_out;
    EmgOptions emg;
    auto* emg_cmd = app.add_subcommand("emg", "EMG envelope of every channel in a CSV");
    emg_cmd->add_option("raw", emg_in, "CSV sampled at --rate")->required()->check(CLI::ExistingFile);
    emg_cmd->add_option("--output,-o", emg_out);
    emg_cmd->add_option("--rate", emg.rate);
    emg_cmd->add_option("--notch", emg.notch_hz);
    emg_cmd->add_option("--decimation", emg.decimation)->check(CLI::PositiveNumber);
    emg_cmd->add_option("--reference-max", emg.reference_max, "Normalization divisor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*report_cmd) return cmd_report(report_dirs, report_csv);
        if (*rmse_cmd) {
            return cmd_rmse(rmse_a, rmse_b, rmse_scale * (rmse_degrees ? 180.0 / std::numbers::pi : 1.0));
        }
        if (*rec_cmd) return cmd_record(rec);
        if (*gait_cmd) return cmd_gaitnorm(gait);
        if (*emg_cmd) return cmd_emg(emg_in, emg, emg_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
