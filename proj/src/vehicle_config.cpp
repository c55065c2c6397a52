// Vehicle description document: parsing, validation and serialisation.

#include "blimp/vehicle.hpp"

#include "json_fields.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace blimp::vehicle {

using nlohmann::json;
using namespace detail;

namespace {

Mat3 inertia(const json& v, const std::string& path) {
    if (v.is_array() && v.size() == 3 && v[0].is_number()) return vec3(v, path).asDiagonal();
    if (v.is_array() && v.size() == 3) {
        Mat3 m;
        for (int r = 0; r < 3; ++r) m.row(r) = vec3(v[r], at(path, static_cast<std::size_t>(r))).transpose();
        return m;
    }
    throw SchemaError(path, "expected principal moments [3] or a 3x3 tensor");
}

json inertia_to_json(const Mat3& m) {
    if (m.isDiagonal(0.0)) return to_array(m.diagonal());
    json rows = json::array();
    for (int r = 0; r < 3; ++r) rows.push_back(to_array(m.row(r).transpose()));
    return rows;
}

ShapeKind shape_kind(const std::string& s, const std::string& path) {
    if (s == "box") return ShapeKind::Box;
    if (s == "cylinder") return ShapeKind::Cylinder;
    if (s == "ellipsoid_section") return ShapeKind::EllipsoidSection;
    throw SchemaError(path, "unknown shape kind '" + s + "'");
}

std::string shape_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::Box: return "box";
        case ShapeKind::Cylinder: return "cylinder";
        case ShapeKind::EllipsoidSection: return "ellipsoid_section";
    }
    return "box";
}

control::Channel channel(const json& obj, const std::string& path) {
    const std::string name = text(obj, "channel", path);
    try {
        return control::channel_from_name(name);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(at(path, "channel"), e.what());
    }
}

BodyConfig parse_body(const json& j, const std::string& path) {
    BodyConfig b;
    b.body.name = text(j, "name", path);
    b.body.mass = number(j, "mass", path);
    if (!(b.body.mass > 0.0)) throw NonPositiveMass(at(path, "mass") + ": body '" + b.body.name + "' has non-positive mass");
    b.body.inertia = inertia(require(j, "inertia", path), at(path, "inertia"));
    if (auto it = j.find("shape"); it != j.end()) {
        const std::string sp = at(path, "shape");
        b.body.shape.kind = shape_kind(text(*it, "kind", sp), at(sp, "kind"));
        b.body.shape.dims = vec3(require(*it, "dims", sp), at(sp, "dims"));
    }
    b.position = vec3_or(j, "position", path, Vec3::Zero());
    b.rpy = vec3_or(j, "rpy", path, Vec3::Zero());
    return b;
}

JointConfig parse_joint(const json& j, const std::string& path) {
    JointConfig c;
    JointSpec& s = c.spec;
    s.name = text(j, "name", path);
    s.parent = text(j, "parent", path);
    s.child = text(j, "child", path);
    s.parent_anchor = vec3_or(j, "anchor", path, Vec3::Zero());
    c.rpy = vec3_or(j, "rpy", path, Vec3::Zero());
    s.deformable = flag_or(j, "deformable", path, false);
    if (auto it = j.find("rigid"); it != j.end()) {
        const std::string rp = at(path, "rigid");
        c.rigid = RigidPreset{number(*it, "frequency_hz", rp), number_or(*it, "damping_ratio", rp, 0.7)};
        if (!(c.rigid->frequency_hz > 0.0)) throw SchemaError(at(rp, "frequency_hz"), "must be positive");
    } else {
        s.k_lin = vec3(require(j, "k_lin", path), at(path, "k_lin"));
        s.c_lin = vec3(require(j, "c_lin", path), at(path, "c_lin"));
        s.k_rot = vec3(require(j, "k_rot", path), at(path, "k_rot"));
        s.c_rot = vec3(require(j, "c_rot", path), at(path, "c_rot"));
    }
    s.free_play_lin = vec3_or(j, "free_play_lin", path, Vec3::Zero());
    s.free_play_rot = vec3_or(j, "free_play_rot", path, Vec3::Zero());
    for (const Vec3* v : {&s.k_lin, &s.c_lin, &s.k_rot, &s.c_rot, &s.free_play_lin, &s.free_play_rot})
        if ((v->array() < 0.0).any()) throw SchemaError(path, "stiffness, damping and free play must be non-negative");
    return c;
}

aero::Kind aero_kind(const std::string& s, const std::string& path) {
    if (s == "planar") return aero::Kind::QuasiPlanar;
    if (s == "cylindrical") return aero::Kind::QuasiCylindrical;
    throw SchemaError(path, "unknown aero kind '" + s + "' (planar|cylindrical)");
}

AeroBinding parse_aero(const json& j, const std::string& path) {
    AeroBinding a;
    a.body = text(j, "body", path);
    aero::AeroPrimitive& p = a.primitive;
    p.kind = aero_kind(text(j, "kind", path), at(path, "kind"));
    p.area = number(j, "area", path);
    p.c_l0 = number(j, "c_l0", path);
    p.c_d0 = number(j, "c_d0", path);
    p.c_d1 = number(j, "c_d1", path);
    p.alpha_stall = number(j, "alpha_stall", path);
    p.k_q = number_or(j, "k_q", path, 0.5 * kSeaLevelDensity);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path, e.what());
    }
    return a;
}

env::BuoyancySection parse_buoyancy(const json& j, const std::string& path) {
    env::BuoyancySection b;
    b.body = text(j, "body", path);
    b.volume = number(j, "volume", path);
    b.coefficient = number_or(j, "coefficient", path, 1.0);
    b.center = vec3_or(j, "center", path, Vec3::Zero());
    if (!(b.volume > 0.0)) throw SchemaError(at(path, "volume"), "must be positive");
    if (b.coefficient < 0.0) throw SchemaError(at(path, "coefficient"), "must be non-negative");
    return b;
}

SensorConfig parse_sensors(const json& j, const std::string& path) {
    SensorConfig s;
    const json& ref = require(j, "reference", path);
    s.reference_body = text(ref, "body", at(path, "reference"));
    s.reference_point = vec3_or(ref, "point", at(path, "reference"), Vec3::Zero());
    const json& imu = require(j, "imu", path);
    s.imu_body = text(imu, "body", at(path, "imu"));
    s.imu_rpy = vec3_or(imu, "rpy", at(path, "imu"), Vec3::Zero());
    const json& as = require(j, "airspeed", path);
    s.airspeed_body = text(as, "body", at(path, "airspeed"));
    s.airspeed_enabled = flag_or(as, "enabled", at(path, "airspeed"), true);
    return s;
}

control::MixerConfig parse_mixer(const json& j, const std::string& path) {
    control::MixerConfig m;
    m.thrust_vector_range = number_or(j, "thrust_vector_range", path, kPi / 2.0);
    const json& rows = require(j, "matrix", path);
    if (!rows.is_object()) throw SchemaError(at(path, "matrix"), "expected an object keyed by channel");
    for (auto& [key, value] : rows.items()) {
        const std::string rp = at(at(path, "matrix"), key);
        control::Channel c;
        try {
            c = control::channel_from_name(key);
        } catch (const std::invalid_argument& e) {
            throw SchemaError(rp, e.what());
        }
        const Vec3 r = vec3(value, rp);
        m.matrix[static_cast<std::size_t>(c)] = {r.x(), r.y(), r.z()};
    }
    return m;
}

json mixer_to_json(const control::MixerConfig& m) {
    json rows = json::object();
    for (std::size_t i = 0; i < control::kChannelCount; ++i) {
        const auto& r = m.matrix[i];
        rows[std::string(control::channel_name(static_cast<control::Channel>(i)))] = json::array({r[0], r[1], r[2]});
    }
    return {{"matrix", rows}, {"thrust_vector_range", m.thrust_vector_range}};
}

// Gain keys and their members, shared by the parser and the serialiser.
struct GainField {
    const char* key;
    double control::ControllerGains::*member;
};
constexpr GainField kGainFields[] = {
    {"yaw_rate_kp", &control::ControllerGains::yaw_rate_kp},
    {"turn_rate_limit", &control::ControllerGains::turn_rate_limit},
    {"pitch_kp", &control::ControllerGains::pitch_kp},
    {"pitch_ki", &control::ControllerGains::pitch_ki},
    {"pitch_i_limit", &control::ControllerGains::pitch_i_limit},
    {"pitch_limit", &control::ControllerGains::pitch_limit},
    {"thrust_kp", &control::ControllerGains::thrust_kp},
    {"thrust_ki", &control::ControllerGains::thrust_ki},
    {"thrust_i_limit", &control::ControllerGains::thrust_i_limit},
    {"pitch_thrust_kp", &control::ControllerGains::pitch_thrust_kp},
    {"gamma_kp", &control::ControllerGains::gamma_kp},
    {"v_min", &control::ControllerGains::v_min},
    {"v_max", &control::ControllerGains::v_max},
    {"pitch_angle_kp", &control::ControllerGains::pitch_angle_kp},
    {"pitch_rate_kp", &control::ControllerGains::pitch_rate_kp},
    {"pitch_rate_ki", &control::ControllerGains::pitch_rate_ki},
    {"pitch_rate_i_limit", &control::ControllerGains::pitch_rate_i_limit},
    {"yaw_rate_loop_kp", &control::ControllerGains::yaw_rate_loop_kp},
    {"yaw_rate_loop_ki", &control::ControllerGains::yaw_rate_loop_ki},
    {"yaw_rate_loop_i_limit", &control::ControllerGains::yaw_rate_loop_i_limit},
    {"control_period", &control::ControllerGains::control_period},
};

}  // namespace

control::ControllerGains parse_gains(const json& j, const std::string& path, const control::ControllerGains& base) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    control::ControllerGains g = base;
    for (const GainField& f : kGainFields) g.*f.member = number_or(j, f.key, path, g.*f.member);
    for (auto& [key, value] : j.items()) {
        bool known = key == "mixer";
        for (const GainField& f : kGainFields) known = known || key == f.key;
        if (!known) throw SchemaError(at(path, key), "unknown gain");
    }
    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path, e.what());
    }
    return g;
}

json gains_to_json(const control::ControllerGains& g) {
    json j = json::object();
    for (const GainField& f : kGainFields) j[f.key] = g.*f.member;
    return j;
}

VehicleConfig parse_vehicle(const json& doc) {
    const std::string root = "$";
    if (!doc.is_object()) throw SchemaError(root, "expected an object");
    VehicleConfig c;
    if (auto it = doc.find("name"); it != doc.end()) c.name = text(doc, "name", root);

    const json& bodies = array(doc, "bodies", root);
    if (bodies.empty()) throw SchemaError(at(root, "bodies"), "at least one body required");
    std::set<std::string> names;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        c.bodies.push_back(parse_body(bodies[i], at(at(root, "bodies"), i)));
        if (!names.insert(c.bodies.back().body.name).second)
            throw SchemaError(at(at(root, "bodies"), i), "duplicate body name '" + c.bodies.back().body.name + "'");
    }
    auto resolve = [&names](const std::string& name, const std::string& what) {
        if (!names.count(name)) throw DanglingReference(what + " references unknown body '" + name + "'");
    };

    const json& joints = array(doc, "joints", root);
    for (std::size_t i = 0; i < joints.size(); ++i) {
        c.joints.push_back(parse_joint(joints[i], at(at(root, "joints"), i)));
        const JointSpec& s = c.joints.back().spec;
        resolve(s.parent, "joint '" + s.name + "'");
        resolve(s.child, "joint '" + s.name + "'");
    }

    const json& aero = array(doc, "aero", root);
    for (std::size_t i = 0; i < aero.size(); ++i) {
        c.aero.push_back(parse_aero(aero[i], at(at(root, "aero"), i)));
        resolve(c.aero.back().body, "aero[" + std::to_string(i) + "]");
    }

    const json& buoy = array(doc, "buoyancy", root);
    std::set<std::string> hull_bodies;
    for (std::size_t i = 0; i < buoy.size(); ++i) {
        c.buoyancy.push_back(parse_buoyancy(buoy[i], at(at(root, "buoyancy"), i)));
        resolve(c.buoyancy.back().body, "buoyancy[" + std::to_string(i) + "]");
        hull_bodies.insert(c.buoyancy.back().body);
    }
    if (hull_bodies.size() < 2) throw SchemaError(at(root, "buoyancy"), "hull needs at least two sections");

    const json& acts = array(doc, "actuators", root);
    for (std::size_t i = 0; i < acts.size(); ++i) {
        const std::string p = at(at(root, "actuators"), i);
        const std::string type = text(acts[i], "type", p);
        if (type == "thruster") {
            ThrusterConfig t;
            t.name = text(acts[i], "name", p);
            t.channel = channel(acts[i], p);
            t.body = text(acts[i], "body", p);
            t.max_thrust = number(acts[i], "max_thrust", p);
            t.axis = vec3_or(acts[i], "axis", p, Vec3::UnitX());
            if (t.axis.norm() == 0.0) throw SchemaError(at(p, "axis"), "must be non-zero");
            resolve(t.body, "thruster '" + t.name + "'");
            c.thrusters.push_back(t);
        } else if (type == "servo") {
            ServoConfig s;
            s.name = text(acts[i], "name", p);
            s.channel = channel(acts[i], p);
            for (const json& jn : array(acts[i], "joints", p)) {
                if (!jn.is_string()) throw SchemaError(at(p, "joints"), "expected joint names");
                s.joints.push_back(jn.get<std::string>());
            }
            s.axis = static_cast<int>(number(acts[i], "axis", p));
            if (s.axis < 0 || s.axis > 2) throw SchemaError(at(p, "axis"), "joint axis index must be 0, 1 or 2");
            s.max_angle = number(acts[i], "max_angle", p);
            s.rate_limit = number(acts[i], "rate_limit", p);
            s.sign = number_or(acts[i], "sign", p, 1.0);
            if (!(s.rate_limit > 0.0)) throw SchemaError(at(p, "rate_limit"), "must be positive");
            for (const std::string& jn : s.joints) {
                bool found = false;
                for (const JointConfig& jc : c.joints) found = found || jc.spec.name == jn;
                if (!found) throw DanglingReference("servo '" + s.name + "' references unknown joint '" + jn + "'");
            }
            c.servos.push_back(s);
        } else {
            throw SchemaError(at(p, "type"), "unknown actuator type '" + type + "' (thruster|servo)");
        }
    }

    c.sensors = parse_sensors(require(doc, "sensors", root), at(root, "sensors"));
    resolve(c.sensors.reference_body, "sensors.reference");
    resolve(c.sensors.imu_body, "sensors.imu");
    resolve(c.sensors.airspeed_body, "sensors.airspeed");

    const json& gains = require(doc, "gains", root);
    c.gains = parse_gains(gains, at(root, "gains"));
    if (auto it = gains.find("mixer"); it != gains.end()) c.mixer = parse_mixer(*it, at(at(root, "gains"), "mixer"));

    if (auto it = doc.find("inflation"); it != doc.end()) {
        const std::string p = at(root, "inflation");
        c.inflation.stiffness_power = number_or(*it, "stiffness_power", p, 2.0);
        c.inflation.buoyancy_power = number_or(*it, "buoyancy_power", p, 1.0);
        c.inflation.free_play_slope = number_or(*it, "free_play_slope", p, 1.0);
    }
    return c;
}

VehicleConfig load_vehicle_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path, "cannot open vehicle document");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path, e.what());
    }
    return parse_vehicle(doc);
}

json to_json(const VehicleConfig& c) {
    json doc;
    doc["name"] = c.name;
    json bodies = json::array();
    for (const BodyConfig& b : c.bodies) {
        bodies.push_back({{"name", b.body.name},
                          {"mass", b.body.mass},
                          {"inertia", inertia_to_json(b.body.inertia)},
                          {"shape", {{"kind", shape_name(b.body.shape.kind)}, {"dims", to_array(b.body.shape.dims)}}},
                          {"position", to_array(b.position)},
                          {"rpy", to_array(b.rpy)}});
    }
    doc["bodies"] = bodies;

    json joints = json::array();
    for (const JointConfig& jc : c.joints) {
        const JointSpec& s = jc.spec;
        json j = {{"name", s.name},
                  {"parent", s.parent},
                  {"child", s.child},
                  {"anchor", to_array(s.parent_anchor)},
                  {"rpy", to_array(jc.rpy)},
                  {"deformable", s.deformable},
                  {"free_play_lin", to_array(s.free_play_lin)},
                  {"free_play_rot", to_array(s.free_play_rot)}};
        if (jc.rigid) {
            j["rigid"] = {{"frequency_hz", jc.rigid->frequency_hz}, {"damping_ratio", jc.rigid->damping_ratio}};
        } else {
            j["k_lin"] = to_array(s.k_lin);
            j["c_lin"] = to_array(s.c_lin);
            j["k_rot"] = to_array(s.k_rot);
            j["c_rot"] = to_array(s.c_rot);
        }
        joints.push_back(j);
    }
    doc["joints"] = joints;

    json aero = json::array();
    for (const AeroBinding& a : c.aero) {
        const aero::AeroPrimitive& p = a.primitive;
        aero.push_back({{"body", a.body},
                        {"kind", p.kind == aero::Kind::QuasiPlanar ? "planar" : "cylindrical"},
                        {"area", p.area},
                        {"c_l0", p.c_l0},
                        {"c_d0", p.c_d0},
                        {"c_d1", p.c_d1},
                        {"alpha_stall", p.alpha_stall},
                        {"k_q", p.k_q}});
    }
    doc["aero"] = aero;

    json buoy = json::array();
    for (const env::BuoyancySection& b : c.buoyancy)
        buoy.push_back(
            {{"body", b.body}, {"volume", b.volume}, {"coefficient", b.coefficient}, {"center", to_array(b.center)}});
    doc["buoyancy"] = buoy;

    json acts = json::array();
    for (const ThrusterConfig& t : c.thrusters)
        acts.push_back({{"type", "thruster"},
                        {"name", t.name},
                        {"channel", std::string(control::channel_name(t.channel))},
                        {"body", t.body},
                        {"max_thrust", t.max_thrust},
                        {"axis", to_array(t.axis)}});
    for (const ServoConfig& s : c.servos)
        acts.push_back({{"type", "servo"},
                        {"name", s.name},
                        {"channel", std::string(control::channel_name(s.channel))},
                        {"joints", s.joints},
                        {"axis", s.axis},
                        {"max_angle", s.max_angle},
                        {"rate_limit", s.rate_limit},
                        {"sign", s.sign}});
    doc["actuators"] = acts;

    doc["sensors"] = {
        {"reference", {{"body", c.sensors.reference_body}, {"point", to_array(c.sensors.reference_point)}}},
        {"imu", {{"body", c.sensors.imu_body}, {"rpy", to_array(c.sensors.imu_rpy)}}},
        {"airspeed", {{"body", c.sensors.airspeed_body}, {"enabled", c.sensors.airspeed_enabled}}}};

    json gains = gains_to_json(c.gains);
    gains["mixer"] = mixer_to_json(c.mixer);
    doc["gains"] = gains;
    doc["inflation"] = {{"stiffness_power", c.inflation.stiffness_power},
                        {"buoyancy_power", c.inflation.buoyancy_power},
                        {"free_play_slope", c.inflation.free_play_slope}};
    return doc;
}

}  // namespace blimp::vehicle
