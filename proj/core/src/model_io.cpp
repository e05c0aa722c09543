#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mskrt/errors.hpp"
#include "mskrt/model.hpp"

namespace mskrt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ParseError(where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
        fail(where, std::string("missing field '") + key + "'");
    }
    return obj.at(key);
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        fail(where, "expected a number");
    }
    return v.get<double>();
}

std::string text(const json& v, const std::string& where) {
    if (!v.is_string()) {
        fail(where, "expected a string");
    }
    return v.get<std::string>();
}

Vec3 vec3(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) {
        fail(where, "expected an array of 3 numbers");
    }
    return {number(v[0], where), number(v[1], where), number(v[2], where)};
}

Quat quaternion(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 4) {
        fail(where, "expected a quaternion [w, x, y, z]");
    }
    Quat q(number(v[0], where), number(v[1], where), number(v[2], where), number(v[3], where));
    // Files carry finite precision; accept near-unit input and renormalize.
    if (std::abs(q.norm() - 1.0) > 1e-6) {
        fail(where, "quaternion is not unit length");
    }
    return q.normalized();
}

RigidTransform transform(const json& obj, const std::string& where) {
    RigidTransform t;
    if (obj.is_null()) {
        return t;
    }
    if (!obj.is_object()) {
        fail(where, "expected an object with rotation/translation");
    }
    if (obj.contains("rotation")) {
        t.rotation = quaternion(obj.at("rotation"), where + ".rotation");
    }
    if (obj.contains("translation")) {
        t.translation = vec3(obj.at("translation"), where + ".translation");
    }
    return t;
}

Mat3 inertia(const json& v, const std::string& where) {
    Mat3 m = Mat3::Zero();
    if (v.is_array() && v.size() == 6 && v[0].is_number()) {
        const double ixx = number(v[0], where), iyy = number(v[1], where), izz = number(v[2], where);
        const double ixy = number(v[3], where), ixz = number(v[4], where), iyz = number(v[5], where);
        m << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
        return m;
    }
    if (v.is_array() && v.size() == 3) {
        for (int r = 0; r < 3; ++r) {
            m.row(r) = vec3(v[static_cast<std::size_t>(r)], where).transpose();
        }
        return m;
    }
    fail(where, "inertia must be [ixx, iyy, izz, ixy, ixz, iyz] or a 3x3 array");
}

JointKind joint_kind(const std::string& s, const std::string& where) {
    if (s == "revolute") return JointKind::revolute;
    if (s == "ball") return JointKind::ball;
    if (s == "free") return JointKind::free;
    fail(where, "unknown joint type '" + s + "'");
}

std::vector<std::string> string_list(const json& v, const std::string& where) {
    if (!v.is_array()) {
        fail(where, "expected an array of names");
    }
    std::vector<std::string> out;
    for (const auto& e : v) {
        out.push_back(text(e, where));
    }
    return out;
}

Polynomial polynomial(const json& v, const std::vector<CoordinateSpec>& coords,
                      const std::string& where) {
    const json& terms = v.is_array() ? v : field(v, "terms", where);
    if (!terms.is_array()) {
        fail(where, "terms must be an array");
    }
    Polynomial p;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const std::string tw = where + ".terms[" + std::to_string(k) + "]";
        Polynomial::Term term;
        term.coeff = number(field(terms[k], "coeff", tw), tw + ".coeff");
        if (terms[k].contains("exponents")) {
            const json& ex = terms[k].at("exponents");
            if (!ex.is_object()) {
                fail(tw, "exponents must map coordinate name to integer power");
            }
            for (const auto& [name, power] : ex.items()) {
                std::size_t index = coords.size();
                for (std::size_t c = 0; c < coords.size(); ++c) {
                    if (coords[c].name == name) {
                        index = c;
                    }
                }
                if (index == coords.size()) {
                    throw ValidationError(where, "polynomial references undeclared coordinate '" +
                                                     name + "'");
                }
                if (!power.is_number_integer()) {
                    fail(tw, "exponent must be an integer");
                }
                if (power.get<int>() != 0) {
                    term.powers.emplace_back(index, power.get<int>());
                }
            }
        }
        p.terms.push_back(std::move(term));
    }
    return p;
}

} // namespace

ChainModel parse_model(std::string_view source, std::string_view origin) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(origin) + ": " + e.what());
    }
    const std::string root(origin);
    if (!doc.is_object()) {
        fail(root, "model document must be a JSON object");
    }

    ModelDescription d;
    d.name = doc.contains("name") ? text(doc.at("name"), root + ".name") : std::string("model");
    if (doc.contains("gravity")) {
        d.gravity = vec3(doc.at("gravity"), root + ".gravity");
    }

    const json& segments = field(doc, "segments", root);
    if (!segments.is_array()) {
        fail(root + ".segments", "expected an array");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::string w = root + ".segments[" + std::to_string(i) + "]";
        SegmentSpec s;
        s.name = text(field(segments[i], "name", w), w + ".name");
        s.mass = number(field(segments[i], "mass", w), w + ".mass");
        if (segments[i].contains("com")) {
            s.com = vec3(segments[i].at("com"), w + ".com");
        }
        if (segments[i].contains("inertia")) {
            s.inertia = inertia(segments[i].at("inertia"), w + ".inertia");
        }
        d.segments.push_back(std::move(s));
    }

    const json& coordinates = field(doc, "coordinates", root);
    if (!coordinates.is_array()) {
        fail(root + ".coordinates", "expected an array");
    }
    for (std::size_t i = 0; i < coordinates.size(); ++i) {
        const std::string w = root + ".coordinates[" + std::to_string(i) + "]";
        CoordinateSpec c;
        if (coordinates[i].is_string()) {
            c.name = coordinates[i].get<std::string>();
        } else {
            c.name = text(field(coordinates[i], "name", w), w + ".name");
            if (coordinates[i].contains("default")) {
                c.default_value = number(coordinates[i].at("default"), w + ".default");
            }
            if (coordinates[i].contains("range")) {
                const json& r = coordinates[i].at("range");
                if (!r.is_array() || r.size() != 2) {
                    fail(w + ".range", "expected [min, max]");
                }
                c.range_min = number(r[0], w + ".range");
                c.range_max = number(r[1], w + ".range");
            }
        }
        d.coordinates.push_back(std::move(c));
    }

    const json& joints = field(doc, "joints", root);
    if (!joints.is_array()) {
        fail(root + ".joints", "expected an array");
    }
    for (std::size_t i = 0; i < joints.size(); ++i) {
        const std::string w = root + ".joints[" + std::to_string(i) + "]";
        const json& jj = joints[i];
        JointSpec j;
        j.name = text(field(jj, "name", w), w + ".name");
        j.kind = joint_kind(text(field(jj, "type", w), w + ".type"), w + ".type");
        if (jj.contains("axis")) {
            j.axis = vec3(jj.at("axis"), w + ".axis");
        } else if (j.kind == JointKind::revolute) {
            fail(w, "revolute joint needs an axis");
        }
        j.parent = text(field(jj, "parent", w), w + ".parent");
        j.child = text(field(jj, "child", w), w + ".child");
        j.parent_offset = transform(jj.value("parent_offset", json()), w + ".parent_offset");
        j.child_offset = transform(jj.value("child_offset", json()), w + ".child_offset");
        j.coordinates = string_list(field(jj, "coordinates", w), w + ".coordinates");
        d.joints.push_back(std::move(j));
    }

    if (doc.contains("muscles")) {
        const json& muscles = doc.at("muscles");
        if (!muscles.is_array()) {
            fail(root + ".muscles", "expected an array");
        }
        for (std::size_t i = 0; i < muscles.size(); ++i) {
            const std::string w = root + ".muscles[" + std::to_string(i) + "]";
            MuscleSpec m;
            m.name = text(field(muscles[i], "name", w), w + ".name");
            m.f_max = number(field(muscles[i], "f_max", w), w + ".f_max");
            const json& arms = muscles[i].value("moment_arms", json::array());
            for (std::size_t k = 0; k < arms.size(); ++k) {
                const std::string aw = w + ".moment_arms[" + std::to_string(k) + "]";
                const std::string cname = text(field(arms[k], "coordinate", aw), aw + ".coordinate");
                MomentArm arm;
                arm.coordinate = d.coordinates.size();
                for (std::size_t c = 0; c < d.coordinates.size(); ++c) {
                    if (d.coordinates[c].name == cname) {
                        arm.coordinate = c;
                    }
                }
                if (arm.coordinate == d.coordinates.size()) {
                    throw ValidationError(m.name, "moment arm references undeclared coordinate '" +
                                                      cname + "'");
                }
                arm.polynomial = polynomial(arms[k], d.coordinates, aw);
                m.moment_arms.push_back(std::move(arm));
            }
            if (muscles[i].contains("length")) {
                m.length = polynomial(muscles[i].at("length"), d.coordinates, w + ".length");
            }
            d.muscles.push_back(std::move(m));
        }
    }

    if (doc.contains("mapping")) {
        const json& mapping = doc.at("mapping");
        if (!mapping.is_array()) {
            fail(root + ".mapping", "expected an array");
        }
        for (std::size_t i = 0; i < mapping.size(); ++i) {
            const std::string w = root + ".mapping[" + std::to_string(i) + "]";
            FrameMapping p;
            p.frame = text(field(mapping[i], "frame", w), w + ".frame");
            p.segment = text(field(mapping[i], "segment", w), w + ".segment");
            if (mapping[i].contains("coordinates")) {
                p.coordinates = string_list(mapping[i].at("coordinates"), w + ".coordinates");
            }
            d.mapping.push_back(std::move(p));
        }
    }

    return ChainModel(std::move(d));
}

ChainModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open model file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str(), path.string());
}

} // namespace mskrt
