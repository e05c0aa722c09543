#include "mskrt/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mskrt/errors.hpp"

namespace mskrt {

using nlohmann::json;

namespace {

void only_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) {
        throw ConfigError(std::string(where) + ": expected an object");
    }
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (auto k : keys) known = known || key == k;
        if (!known) {
            throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) {
        path = base / path;
    }
    return path.lexically_normal();
}

void read_window(const json& j, std::string_view where, SplineWindow& w) {
    only_keys(j, where, {"window", "smoothing", "delay"});
    w.window = j.value("window", w.window);
    w.smoothing = j.value("smoothing", w.smoothing);
    w.delay = j.value("delay", w.delay);
}

Vec3 read_vec3(const json& j, std::string_view where) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError(std::string(where) + ": expected [x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void read_insole_side(const json& j, std::string_view where, InsoleSetup& s) {
    only_keys(j, where, {"body", "mount"});
    s.body = j.value("body", s.body);
    if (j.contains("mount")) {
        const json& m = j.at("mount");
        only_keys(m, std::string(where) + ".mount", {"rotation", "translation"});
        if (m.contains("rotation")) {
            const json& r = m.at("rotation");
            if (!r.is_array() || r.size() != 4) {
                throw ConfigError(std::string(where) + ".mount.rotation: expected [w, x, y, z]");
            }
            Quat q(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>());
            if (std::abs(q.norm() - 1.0) > 1e-6) {
                throw ConfigError(std::string(where) + ".mount.rotation: not a unit quaternion");
            }
            s.mount.rotation = q.normalized();
        }
        if (m.contains("translation")) {
            s.mount.translation = read_vec3(m.at("translation"), std::string(where) + ".mount.translation");
        }
    }
}

HeadingMode parse_heading_mode(const std::string& s) {
    if (s == "global") return HeadingMode::global;
    if (s == "per_sensor") return HeadingMode::per_sensor;
    throw ConfigError("calibrate.heading_mode: expected 'global' or 'per_sensor', got '" + s + "'");
}

} // namespace

void PipelineConfig::validate() const {
    if (model.empty()) throw ConfigError("config: 'model' is required");
    if (session.empty()) throw ConfigError("config: 'session' is required");
    if (so.workers < 1) throw ConfigError("so.workers must be at least 1");
    if (!(so.deadline_s > 0.0)) throw ConfigError("so.deadline_s must be positive");
    if (!(so.residual_weight > 0.0)) throw ConfigError("so.residual_weight must be positive");
    if (!(so.virtual_cost_s >= 0.0)) throw ConfigError("so.virtual_cost_s must be non-negative");
    if (!(so.options.kkt_tolerance > 0.0) || so.options.max_iterations < 1) {
        throw ConfigError("so: kkt_tolerance and max_iterations must be positive");
    }
    if (!(sync.delay_s >= 0.0)) throw ConfigError("sync.delay_s must be non-negative");
    if (!(sync.tol_s >= 0.0)) throw ConfigError("sync.tol_s must be non-negative");
    if (!(insole.rate > 0.0)) throw ConfigError("insole.rate must be positive");
    if (insole.reorder_window < 0) throw ConfigError("insole.reorder_window must be non-negative");
    if (!(insole.activation_threshold >= 0.0)) {
        throw ConfigError("insole.activation_threshold must be non-negative");
    }
    if (insole.left.body.empty() || insole.right.body.empty()) {
        throw ConfigError("insole: left and right bodies are required");
    }
    if (body_weight && !(*body_weight > 0.0)) throw ConfigError("body_weight must be positive");
    if (calibrate.frames < 1) throw ConfigError("calibrate.frames must be at least 1");
    if (ik.max_iterations < 1) throw ConfigError("ik.max_iterations must be at least 1");
    for (const auto& [frame, w] : ik.weights) {
        if (!(w > 0.0)) throw ConfigError("ik.weights." + frame + " must be positive");
    }
    try {
        ik_filter.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("filter.ik: ") + e.what());
    }
    try {
        insole_filter.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("filter.insole: ") + e.what());
    }
}

void PipelineConfig::check_files() const {
    validate();
    auto need = [](const std::filesystem::path& p, std::string_view key) {
        if (!std::filesystem::is_regular_file(p)) {
            throw ConfigError(std::string(key) + ": file not found '" + p.string() + "'");
        }
    };
    need(model, "model");
    need(session, "session");
    if (calibration) need(*calibration, "calibration");
}

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    PipelineConfig c;
    try {
        only_keys(doc, "config",
                  {"model", "session", "calibration", "output_dir", "mode", "body_weight", "sync",
                   "so", "filter", "insole", "ik", "calibrate"});
        if (doc.contains("model")) c.model = resolve(base_dir, doc.at("model").get<std::string>());
        if (doc.contains("session")) {
            c.session = resolve(base_dir, doc.at("session").get<std::string>());
        }
        if (doc.contains("calibration") && !doc.at("calibration").is_null()) {
            c.calibration = resolve(base_dir, doc.at("calibration").get<std::string>());
        }
        c.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
        const std::string mode = doc.value("mode", std::string("logical"));
        if (mode == "logical") {
            c.mode = PlaybackMode::logical;
        } else if (mode == "realtime") {
            c.mode = PlaybackMode::realtime;
        } else {
            throw ConfigError("mode: expected 'logical' or 'realtime', got '" + mode + "'");
        }
        if (doc.contains("body_weight") && !doc.at("body_weight").is_null()) {
            c.body_weight = doc.at("body_weight").get<double>();
        }
        if (doc.contains("sync")) {
            const json& s = doc.at("sync");
            only_keys(s, "sync", {"delay_s", "tol_s"});
            c.sync.delay_s = s.value("delay_s", c.sync.delay_s);
            c.sync.tol_s = s.value("tol_s", c.sync.tol_s);
        }
        if (doc.contains("so")) {
            const json& s = doc.at("so");
            only_keys(s, "so",
                      {"workers", "deadline_s", "residual_weight", "virtual_cost_s",
                       "kkt_tolerance", "max_iterations"});
            const long long workers = s.value("workers", static_cast<long long>(c.so.workers));
            if (workers < 1) throw ConfigError("so.workers must be at least 1");
            c.so.workers = static_cast<std::size_t>(workers);
            c.so.deadline_s = s.value("deadline_s", c.so.deadline_s);
            c.so.residual_weight = s.value("residual_weight", c.so.residual_weight);
            c.so.virtual_cost_s = s.value("virtual_cost_s", c.so.virtual_cost_s);
            c.so.options.kkt_tolerance = s.value("kkt_tolerance", c.so.options.kkt_tolerance);
            c.so.options.max_iterations = s.value("max_iterations", c.so.options.max_iterations);
        }
        if (doc.contains("filter")) {
            const json& f = doc.at("filter");
            only_keys(f, "filter", {"ik", "insole"});
            if (f.contains("ik")) read_window(f.at("ik"), "filter.ik", c.ik_filter);
            if (f.contains("insole")) read_window(f.at("insole"), "filter.insole", c.insole_filter);
        }
        if (doc.contains("insole")) {
            const json& s = doc.at("insole");
            only_keys(s, "insole", {"rate", "reorder_window", "activation_threshold", "left", "right"});
            c.insole.rate = s.value("rate", c.insole.rate);
            c.insole.reorder_window = s.value("reorder_window", c.insole.reorder_window);
            c.insole.activation_threshold =
                s.value("activation_threshold", c.insole.activation_threshold);
            if (s.contains("left")) read_insole_side(s.at("left"), "insole.left", c.insole.left);
            if (s.contains("right")) read_insole_side(s.at("right"), "insole.right", c.insole.right);
        }
        if (doc.contains("ik")) {
            const json& s = doc.at("ik");
            only_keys(s, "ik", {"weights", "max_iterations", "step_tolerance", "initial_damping"});
            if (s.contains("weights")) {
                const json& w = s.at("weights");
                if (!w.is_object()) throw ConfigError("ik.weights: expected an object");
                for (const auto& [frame, value] : w.items()) {
                    c.ik.weights[frame] = value.get<double>();
                }
            }
            c.ik.max_iterations = s.value("max_iterations", c.ik.max_iterations);
            c.ik.step_tolerance = s.value("step_tolerance", c.ik.step_tolerance);
            c.ik.initial_damping = s.value("initial_damping", c.ik.initial_damping);
        }
        if (doc.contains("calibrate")) {
            const json& s = doc.at("calibrate");
            only_keys(s, "calibrate", {"frames", "heading_reference", "heading_mode"});
            c.calibrate.frames = s.value("frames", c.calibrate.frames);
            c.calibrate.heading_reference =
                s.value("heading_reference", c.calibrate.heading_reference);
            if (s.contains("heading_mode")) {
                c.calibrate.mode = parse_heading_mode(s.at("heading_mode").get<std::string>());
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path());
}

} // namespace mskrt
