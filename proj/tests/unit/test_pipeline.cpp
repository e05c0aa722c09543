#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "fixtures.hpp"
#include "mskrt/analysis.hpp"
#include "mskrt/errors.hpp"
#include "mskrt/pipeline.hpp"

using namespace mskrt;
namespace fs = std::filesystem;

namespace {

CsvTable reference_table(const Session& s, const std::vector<ReferenceRow>& rows) {
    CsvTable t;
    t.channels = s.reference_names;
    for (const auto& r : rows) t.append(r.t, r.values);
    return t;
}

Session truncate(const Session& s, double end) {
    Session out = s;
    std::erase_if(out.orientations, [&](const OrientationFrame& f) { return f.t >= end; });
    std::erase_if(out.bursts, [&](const InsoleBurst& b) { return b.arrival_t >= end; });
    std::erase_if(out.refq, [&](const ReferenceRow& r) { return r.t >= end; });
    std::erase_if(out.reftau, [&](const ReferenceRow& r) { return r.t >= end; });
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mskrt_test_pipeline_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("standing recovers the still pose and its holding torques") {
    const PipelineConfig cfg = load_config(fixtures::data_path("standing.json"));
    const ChainModel model = load_model(cfg.model);
    const Session session = load_session(cfg.session);
    const RunResult r = run_pipeline(cfg, model, session, std::nullopt);

    const auto& c = r.counters;
    CHECK(r.calibrated_online);
    CHECK(c.frames == session.orientations.size());
    CHECK(c.ik_unconverged == 0);
    CHECK(c.matched > 0);
    CHECK(c.so_received == c.matched);
    CHECK(c.so_emitted + c.so_discarded == c.so_received);
    CHECK(c.so_unconverged == 0);
    CHECK(c.max_kkt < 1e-6);
    CHECK(c.min_activation >= 0.0);
    CHECK(c.max_activation <= 1.0);
    CHECK(r.deliveries.size() == c.so_received);
    CHECK(r.act.rows.size() == c.so_emitted);

    for (const auto& ch : rmse(r.q, reference_table(session, session.refq))) {
        INFO(ch.channel);
        CHECK(ch.rmse < 1e-3);
    }
    // joint torques of a still stance are set by gravity alone
    const auto tau_ref = reference_table(session, session.reftau);
    for (const auto& ch : rmse(r.tau, tau_ref)) {
        INFO(ch.channel);
        const auto col = tau_ref.column(*tau_ref.find(ch.channel));
        const double scale = std::max(1.0, *std::max_element(col.begin(), col.end(), [](double a, double b) {
            return std::abs(a) < std::abs(b);
        }));
        CHECK(ch.rmse < 0.02 * std::abs(scale));
    }
}

TEST_CASE("logical runs are reproducible to the byte") {
    PipelineConfig cfg = load_config(fixtures::data_path("walking.json"));
    const ChainModel model = load_model(cfg.model);
    const Session session = truncate(load_session(cfg.session), 3.0);
    const fs::path a = scratch("a"), b = scratch("b");
    const RunResult ra = run_pipeline(cfg, model, session, std::nullopt);
    const RunResult rb = run_pipeline(cfg, model, session, std::nullopt);
    write_outputs(a, cfg, ra);
    write_outputs(b, cfg, rb);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        INFO(entry.path().filename().string());
        REQUIRE(fs::exists(b / entry.path().filename()));
        CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
        ++files;
    }
    CHECK(files >= 8);
    CHECK(ra.assignments == rb.assignments);
    for (std::size_t i = 0; i < ra.assignments.size(); ++i) {
        CHECK(ra.assignments[i] == dispatch(ra.deliveries_index[i], cfg.so.workers));
    }

    // the saved outputs reproduce the in-memory report
    const LatencyReport rep = report_from_dir(a);
    CHECK(rep.samples == ra.report.samples);
    CHECK(rep.n_workers == cfg.so.workers);
    CHECK(rep.on_time == ra.report.on_time);
    REQUIRE(rep.p95_ms);
    CHECK(*rep.p95_ms == doctest::Approx(*ra.report.p95_ms).epsilon(1e-9));
    CHECK(*rep.summary.total_mean_ms == doctest::Approx(*ra.report.summary.total_mean_ms).epsilon(1e-9));

    const CsvTable q = read_csv(a / "q.csv");
    CHECK(q.channels == ra.q.channels);
    CHECK(q.rows == ra.q.rows);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("realtime run on threads keeps order") {
    PipelineConfig cfg = load_config(fixtures::data_path("walking.json"));
    cfg.mode = PlaybackMode::realtime;
    cfg.so.workers = 4;
    const ChainModel model = load_model(cfg.model);
    const Session session = truncate(load_session(cfg.session), 1.5);
    const RunResult r = run_pipeline(cfg, model, session, std::nullopt);
    const auto& c = r.counters;
    CHECK(c.so_received > 50);
    CHECK(c.so_emitted + c.so_discarded == c.so_received);
    CHECK(c.so_unconverged == 0);
    CHECK(std::is_sorted(r.act.t.begin(), r.act.t.end()));
    CHECK(std::adjacent_find(r.act.t.begin(), r.act.t.end()) == r.act.t.end());
    for (const auto& d : r.deliveries) {
        if (d.discarded) continue;
        CHECK(d.log.contains(EventId::joint_angles_produced));
        CHECK(d.log.contains(EventId::activations_calculated));
    }
}

TEST_CASE("report_from_dir rejects missing or damaged runs") {
    const fs::path dir = scratch("bad");
    fs::create_directories(dir);
    CHECK_THROWS_AS(report_from_dir(dir), Error);
    std::ofstream(dir / "run.json") << "{not json";
    std::ofstream(dir / "events.csv") << "index\n";
    CHECK_THROWS_AS(report_from_dir(dir), ParseError);
    fs::remove_all(dir);
}
