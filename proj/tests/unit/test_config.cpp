#include <doctest.h>

#include <string>

#include "fixtures.hpp"
#include "mskrt/config.hpp"
#include "mskrt/errors.hpp"

using namespace mskrt;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "/base");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("minimal config takes documented defaults") {
    const PipelineConfig c = parse_config(R"({"model": "m.json", "session": "s.session"})", "/base");
    CHECK(c.model == "/base/m.json");
    CHECK(c.session == "/base/s.session");
    CHECK_FALSE(c.calibration);
    CHECK(c.mode == PlaybackMode::logical);
    CHECK(c.sync.delay_s == 0.26);
    CHECK(c.sync.tol_s == 0.015);
    CHECK(c.so.workers == 12);
    CHECK(c.so.deadline_s == 0.5);
    CHECK(c.so.residual_weight == 1e3);
    CHECK(c.so.options.kkt_tolerance == 1e-8);
    CHECK(c.insole.reorder_window == 5);
    CHECK(c.insole.activation_threshold == 10.0);
    CHECK(c.insole.left.body == "calcn_l");
    CHECK(c.ik_filter.window == 20);
    CHECK(c.ik_filter.delay == 10);
    CHECK(c.calibrate.frames == 10);
}

TEST_CASE("every section is read") {
    const PipelineConfig c = parse_config(R"({
        "model": "/abs/m.json", "session": "s.session", "calibration": "c.json",
        "output_dir": "out/x", "mode": "realtime", "body_weight": 700,
        "sync": {"delay_s": 0.1, "tol_s": 0.02},
        "so": {"workers": 4, "deadline_s": 0.3, "residual_weight": 50, "virtual_cost_s": 0.01,
               "kkt_tolerance": 1e-9, "max_iterations": 40},
        "filter": {"ik": {"window": 30, "smoothing": 1e-5, "delay": 12},
                   "insole": {"window": 10, "smoothing": 0, "delay": 4}},
        "insole": {"rate": 200, "reorder_window": 3, "activation_threshold": 20,
                   "left": {"body": "foot_l", "mount": {"rotation": [1, 0, 0, 0], "translation": [0.1, 0, 0]}}},
        "ik": {"weights": {"pelvis_link": 2.0}, "max_iterations": 20, "step_tolerance": 1e-7,
               "initial_damping": 1e-4},
        "calibrate": {"frames": 5, "heading_reference": "torso_link", "heading_mode": "per_sensor"}
    })", "/base");
    CHECK(c.model == "/abs/m.json");
    CHECK(*c.calibration == "/base/c.json");
    CHECK(c.output_dir == "/base/out/x");
    CHECK(c.mode == PlaybackMode::realtime);
    CHECK(*c.body_weight == 700.0);
    CHECK(c.sync.delay_s == 0.1);
    CHECK(c.so.workers == 4);
    CHECK(c.so.options.max_iterations == 40);
    CHECK(c.so.virtual_cost_s == 0.01);
    CHECK(c.ik_filter.smoothing == 1e-5);
    CHECK(c.insole_filter.window == 10);
    CHECK(c.insole.rate == 200.0);
    CHECK(c.insole.left.body == "foot_l");
    CHECK(c.insole.left.mount.translation.x() == 0.1);
    CHECK(c.insole.right.body == "calcn_r");
    CHECK(c.ik.weights.at("pelvis_link") == 2.0);
    CHECK(c.ik.initial_damping == 1e-4);
    CHECK(c.calibrate.mode == HeadingMode::per_sensor);
    CHECK(c.calibrate.heading_reference == "torso_link");
}

TEST_CASE("invalid configs raise ConfigError naming the field") {
    const std::string base = R"("model": "m", "session": "s")";
    CHECK(error_of("{").find("config") != std::string::npos);
    CHECK(error_of("[]") != "");
    CHECK(error_of(R"({"session": "s"})").find("model") != std::string::npos);
    CHECK(error_of("{" + base + R"(, "colour": 1})").find("colour") != std::string::npos);
    CHECK(error_of("{" + base + R"(, "so": {"workers": 0}})").find("so.workers") != std::string::npos);
    CHECK(error_of("{" + base + R"(, "so": {"worker": 3}})").find("worker") != std::string::npos);
    CHECK(error_of("{" + base + R"(, "mode": "fast"})").find("mode") != std::string::npos);
    CHECK(error_of("{" + base + R"(, "filter": {"ik": {"window": 10, "delay": 10}}})").find("filter.ik") != std::string::npos);
    CHECK(error_of("{" + base + R"(, "sync": {"tol_s": -1}})").find("sync.tol_s") != std::string::npos);
    CHECK(error_of("{" + base + R"(, "calibrate": {"heading_mode": "up"}})").find("heading_mode") != std::string::npos);
    CHECK(error_of("{" + base + R"(, "insole": {"left": {"mount": {"rotation": [2, 0, 0, 0]}}}})") != "");
    CHECK(error_of("{" + base + R"(, "body_weight": -5})").find("body_weight") != std::string::npos);
    CHECK(error_of("{" + base + R"(, "ik": {"weights": {"a": 0}}})").find("ik.weights") != std::string::npos);
}

TEST_CASE("bundled configs load and reference existing files") {
    for (const char* name : {"standing.json", "walking.json"}) {
        const PipelineConfig c = load_config(fixtures::data_path(name));
        CHECK_NOTHROW(c.check_files());
        CHECK(c.insole.left.mount.rotation.isApprox(default_insole("calcn_l").mount.rotation, 1e-12));
    }
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
    PipelineConfig c = parse_config(R"({"model": "nope.json", "session": "nope.session"})", "/nonexistent");
    CHECK_NOTHROW(c.validate());
    CHECK_THROWS_AS(c.check_files(), ConfigError);
}
