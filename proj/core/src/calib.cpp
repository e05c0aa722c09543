#include "mskrt/calib.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace mskrt {

namespace {

Quat canonical(Quat q) {
    q.normalize();
    if (q.w() < 0.0) {
        q.coeffs() *= -1.0;
    }
    return q;
}

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a;
}

} // namespace

Quat average_quaternions(std::span<const Quat> samples) {
    if (samples.empty()) {
        throw Error("average_quaternions: empty sample list");
    }
    Eigen::Matrix4d accumulator = Eigen::Matrix4d::Zero();
    for (const Quat& q : samples) {
        if (std::abs(q.norm() - 1.0) > 1e-6) {
            throw Error("average_quaternions: sample is not unit norm");
        }
        const Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
        accumulator += v * v.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(accumulator);
    const Eigen::Vector4d& values = eig.eigenvalues();  // ascending
    if (values[3] - values[2] <= 1e-12 * std::max(1.0, values[3])) {
        throw AmbiguousAverageError("average_quaternions: dominant eigenvalue is not unique");
    }
    const Eigen::Vector4d v = eig.eigenvectors().col(3);
    return canonical(Quat(v[0], v[1], v[2], v[3]));
}

Quat CalibrationSet::apply(const std::string& frame, const Quat& measured) const {
    const auto it = sensors.find(frame);
    if (it == sensors.end()) {
        throw ValidationError(frame, "sensor frame is not calibrated");
    }
    return (rot_z(it->second.heading) * measured * it->second.offset.conjugate()).normalized();
}

CalibrationSet calibrate(const ChainModel& model, const Eigen::VectorXd& default_pose,
                         const std::map<std::string, std::vector<OrientationSample>>& frames,
                         const CalibrationOptions& options) {
    const auto poses = forward_kinematics(model, default_pose);

    for (const std::string& name : options.required) {
        const auto it = frames.find(name);
        if (it == frames.end() || it->second.empty()) {
            throw ValidationError(name, "missing sensor: no calibration frames");
        }
    }

    struct Averaged {
        std::string segment;
        Quat segment_rotation;
        Quat sensor;
    };
    std::map<std::string, Averaged> averaged;
    for (const auto& [name, samples] : frames) {
        const auto segment = model.mapping().segment_for(name);
        if (!segment) {
            throw ValidationError(name, "sensor frame has no joint mapping entry");
        }
        if (samples.empty()) {
            throw ValidationError(name, "missing sensor: no calibration frames");
        }
        const std::size_t n = options.frames == 0 ? samples.size()
                                                  : std::min(options.frames, samples.size());
        std::vector<Quat> quats;
        quats.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            quats.push_back(samples[k].quat);
        }
        averaged[name] = {*segment, poses[model.segment_index(*segment)].rotation,
                          average_quaternions(quats)};
    }

    CalibrationSet set;
    set.mode = options.mode;

    std::string reference = options.heading_reference;
    if (reference.empty()) {
        const std::size_t root_joint = model.joint_order().front();
        const std::string& root_segment = model.segments()[model.joint_child(root_joint)].name;
        reference = model.mapping().frame_for(root_segment).value_or("");
    }
    auto heading_of = [](const Averaged& a) {
        return wrap_angle(-yaw_of(a.sensor * a.segment_rotation.conjugate()));
    };
    if (options.mode == HeadingMode::global) {
        const auto it = averaged.find(reference);
        if (it == averaged.end()) {
            throw ValidationError(reference.empty() ? "heading_reference" : reference,
                                  "missing sensor: heading reference has no calibration frames");
        }
        set.heading_correction = heading_of(it->second);
    }

    for (const auto& [name, a] : averaged) {
        SensorCalibration c;
        c.segment = a.segment;
        c.heading = options.mode == HeadingMode::global ? set.heading_correction : heading_of(a);
        c.offset = canonical(a.segment_rotation.conjugate() * rot_z(c.heading) * a.sensor);
        set.sensors.emplace(name, std::move(c));
    }
    return set;
}

std::string calibration_to_json(const CalibrationSet& set) {
    nlohmann::json doc;
    doc["mode"] = set.mode == HeadingMode::global ? "global" : "per_sensor";
    doc["heading_correction"] = set.heading_correction;
    nlohmann::json sensors = nlohmann::json::object();
    for (const auto& [name, c] : set.sensors) {
        sensors[name] = {{"segment", c.segment},
                         {"quat", {c.offset.w(), c.offset.x(), c.offset.y(), c.offset.z()}},
                         {"heading", c.heading}};
    }
    doc["sensors"] = sensors;
    return doc.dump(2) + "\n";
}

CalibrationSet calibration_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("calibration: ") + e.what());
    }
    try {
        CalibrationSet set;
        const std::string mode = doc.value("mode", "global");
        if (mode == "global") {
            set.mode = HeadingMode::global;
        } else if (mode == "per_sensor") {
            set.mode = HeadingMode::per_sensor;
        } else {
            throw ParseError("calibration: unknown heading mode '" + mode + "'");
        }
        set.heading_correction = doc.value("heading_correction", 0.0);
        for (const auto& [name, entry] : doc.at("sensors").items()) {
            SensorCalibration c;
            c.segment = entry.value("segment", "");
            const auto& q = entry.at("quat");
            if (!q.is_array() || q.size() != 4) {
                throw ParseError("calibration: sensor '" + name + "' quat must be [w, x, y, z]");
            }
            c.offset = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                            q[3].get<double>());
            if (std::abs(c.offset.norm() - 1.0) > 1e-6) {
                throw ValidationError(name, "calibration quaternion is not unit norm");
            }
            c.offset.normalize();
            c.heading = entry.value("heading", set.heading_correction);
            set.sensors.emplace(name, std::move(c));
        }
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("calibration: ") + e.what());
    }
}

void save_calibration(const std::filesystem::path& path, const CalibrationSet& set) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write calibration file '" + path.string() + "'");
    }
    out << calibration_to_json(set);
}

CalibrationSet load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open calibration file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return calibration_from_json(buf.str());
}

} // namespace mskrt
