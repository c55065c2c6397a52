#include "blimp/scenario.hpp"
#include "blimp/vehicle.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace blimp;
using namespace blimp::vehicle;
using nlohmann::json;
using doctest::Approx;

namespace {

json reference_doc() {
    std::ifstream in(scenario::default_vehicle_path());
    return json::parse(in);
}

json& find_named(json& list, const std::string& name) {
    for (json& x : list)
        if (x.value("name", "") == name) return x;
    throw std::runtime_error("no entry " + name);
}

std::size_t servo_index(const VehicleConfig& c, const std::string& name) {
    for (std::size_t i = 0; i < c.servos.size(); ++i)
        if (c.servos[i].name == name) return i;
    throw std::runtime_error("no servo " + name);
}

void settle(Vehicle& v, int steps) {
    for (int i = 0; i < steps; ++i) {
        std::vector<Wrench> w = v.actuate({}, 0.001);
        const auto a = v.aero_wrenches(Vec3::Zero());
        const auto b = v.buoyancy_wrenches();
        w.insert(w.end(), a.begin(), a.end());
        w.insert(w.end(), b.begin(), b.end());
        v.world().step(0.001, w);
    }
}

}  // namespace

TEST_CASE("reference blimp trim") {
    const Vehicle v(load_vehicle_file(scenario::default_vehicle_path()));
    const TrimReport t = v.trim_report();
    CHECK(t.total_mass == Approx(10.0).epsilon(1e-9));
    CHECK(t.length == Approx(5.0).epsilon(0.1));
    CHECK(std::abs(t.net_vertical) <= 1e-6 * t.weight);
    CHECK(v.config().buoyancy.size() >= 2);
}

TEST_CASE("schema errors") {
    json doc = reference_doc();
    doc["joints"][0]["child"] = "nowhere";
    try {
        parse_vehicle(doc);
        FAIL("expected DanglingReference");
    } catch (const DanglingReference& e) {
        CHECK(std::string(e.what()).find(doc["joints"][0]["name"].get<std::string>()) != std::string::npos);
    }

    doc = reference_doc();
    doc["bodies"] = json::array();
    CHECK_THROWS_AS(parse_vehicle(doc), SchemaError);

    doc = reference_doc();
    doc["bodies"][0]["mass"] = "heavy";
    try {
        parse_vehicle(doc);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.path() == "$.bodies[0].mass");
    }

    doc = reference_doc();
    doc["bodies"][1]["mass"] = 0.0;
    CHECK_THROWS_AS(parse_vehicle(doc), NonPositiveMass);
}

TEST_CASE("vehicle document round trip") {
    const json once = to_json(parse_vehicle(reference_doc()));
    const json twice = to_json(parse_vehicle(once));
    CHECK(once == twice);
}

TEST_CASE("inflation scaling and restore") {
    Vehicle v(load_vehicle_file(scenario::default_vehicle_path()));
    InflationSetting s;
    s.level = 0.95;
    s.stiffness_scale = 0.2;
    s.buoyancy_scale = 0.95;
    s.free_play_scale = 8.0;
    v.set_inflation(s);
    v.set_inflation(s);
    bool any = false;
    for (std::size_t i = 0; i < v.world().joint_count(); ++i) {
        const JointSpec& n = v.nominal_joints()[i];
        const JointSpec& j = v.world().joint(JointId{i});
        if (!n.deformable) {
            CHECK(j.k_rot == n.k_rot);
            continue;
        }
        any = true;
        CHECK((j.k_rot - 0.2 * n.k_rot).norm() <= 1e-12 * n.k_rot.norm());
        CHECK((j.k_lin - 0.2 * n.k_lin).norm() <= 1e-12 * n.k_lin.norm());
        CHECK((j.free_play_rot - 8.0 * n.free_play_rot).norm() < 1e-15);
    }
    CHECK(any);
    const double nominal_lift = v.trim_report().weight;
    double lift = 0.0;
    for (const Wrench& w : v.buoyancy_wrenches()) lift += w.force.z();
    CHECK(lift == Approx(0.95 * nominal_lift).epsilon(1e-9));

    InflationSetting full;
    full.level = 1.0;
    v.set_inflation(full);
    for (std::size_t i = 0; i < v.world().joint_count(); ++i) {
        const JointSpec& n = v.nominal_joints()[i];
        const JointSpec& j = v.world().joint(JointId{i});
        CHECK(j.k_rot == n.k_rot);
        CHECK(j.c_lin == n.c_lin);
        CHECK(j.free_play_rot == n.free_play_rot);
    }

    InflationSetting bad;
    bad.level = 1.5;
    CHECK_THROWS_AS(v.set_inflation(bad), OutOfRange);
}

TEST_CASE("default scale laws") {
    InflationSetting s;
    s.level = 0.5;
    const InflationState st = inflation_scales(s, InflationLaw{});
    CHECK(st.stiffness_scale == Approx(0.25));
    CHECK(st.buoyancy_scale == Approx(0.5));
    CHECK(st.free_play_scale == Approx(1.5));
    s.level = 1.0;
    const InflationState one = inflation_scales(s, InflationLaw{});
    CHECK(one.stiffness_scale == 1.0);
    CHECK(one.buoyancy_scale == 1.0);
    CHECK(one.free_play_scale == 1.0);
}

TEST_CASE("actuators") {
    json doc = reference_doc();
    find_named(doc["actuators"], "top_rudder")["max_angle"] = 1.0;
    find_named(doc["actuators"], "top_rudder")["rate_limit"] = 2.0;
    find_named(doc["actuators"], "left_main")["max_thrust"] = 15.0;
    Vehicle v(parse_vehicle(doc));
    const std::size_t rudder = servo_index(v.config(), "top_rudder");

    std::vector<Wrench> w = v.actuate({}, 0.1);
    for (const Wrench& x : w) CHECK(x.force.norm() == 0.0);
    CHECK(v.servo_angle(rudder) == 0.0);

    control::ActuatorCommands c;
    c[control::Channel::TopRudder] = 1.0;
    c[control::Channel::LeftMain] = 1.0;
    w = v.actuate(c, 0.1);
    CHECK(v.servo_angle(rudder) == Approx(0.2));
    double max_force = 0.0;
    for (const Wrench& x : w) max_force = std::max(max_force, x.force.norm());
    CHECK(max_force == Approx(15.0));
}

TEST_CASE("rigid airframe sags less than half a degree") {
    Vehicle v(load_vehicle_file(scenario::default_vehicle_path()), {0, 0, 50});
    settle(v, 5000);
    for (std::size_t i = 0; i < v.world().joint_count(); ++i) {
        const JointId id{i};
        const JointDisplacement d = joint_displacement(v.world().joint(id), v.world().state(v.world().joint_parent(id)),
                                                       v.world().state(v.world().joint_child(id)));
        CHECK(d.angular.norm() < 0.5 * kPi / 180.0);
    }
}

TEST_CASE("fin gyro equals hull rate under rigid rotation") {
    Vehicle v(load_vehicle_file(scenario::default_vehicle_path()), {0, 0, 50});
    const Vec3 omega(0.02, -0.05, 0.15);
    const Vec3 centre = v.world().state(BodyId{0}).position;
    for (std::size_t i = 0; i < v.world().body_count(); ++i) {
        BodyState& s = v.world().state(BodyId{i});
        s.angular_velocity = s.orientation.conjugate() * omega;
        s.velocity = omega.cross(s.position - centre);
    }
    const SensorReading r = v.read_sensors(Vec3::Zero());
    CHECK((r.gyro - r.hull_rate).norm() < 1e-6);
    CHECK(r.nav.airspeed.has_value());

    json doc = reference_doc();
    doc["sensors"]["airspeed"]["enabled"] = false;
    const Vehicle blind(parse_vehicle(doc));
    CHECK_FALSE(blind.read_sensors(Vec3::Zero()).nav.airspeed.has_value());
}
