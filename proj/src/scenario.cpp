#include "blimp/scenario.hpp"

#include "json_fields.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#ifndef BLIMP_DEFAULT_VEHICLE
#define BLIMP_DEFAULT_VEHICLE "config/reference_blimp.json"
#endif

namespace blimp::scenario {

using nlohmann::json;
using namespace detail;
namespace fs = std::filesystem;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string resolve_vehicle(const std::string& p, const std::string& base_dir) {
    const fs::path path(p);
    if (path.is_absolute()) return p;
    const fs::path near_spec = fs::path(base_dir) / path;
    if (fs::exists(near_spec)) return near_spec.lexically_normal().string();
    if (fs::exists(path)) return path.string();
    const fs::path source_root = fs::path(BLIMP_DEFAULT_VEHICLE).parent_path().parent_path();
    if (fs::exists(source_root / path)) return (source_root / path).string();
    return near_spec.lexically_normal().string();
}

env::WindConfig parse_wind(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    env::WindConfig w;
    w.speed = number_or(j, "speed", path, w.speed);
    w.from_deg = number_or(j, "from_deg", path, w.from_deg);
    w.magnitude = number_or(j, "magnitude", path, w.magnitude);
    w.reference_altitude = number_or(j, "reference_altitude", path, w.reference_altitude);
    w.reference_airspeed = number_or(j, "reference_airspeed", path, w.reference_airspeed);
    w.knots_per_magnitude = number_or(j, "knots_per_magnitude", path, w.knots_per_magnitude);
    try {
        w.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path, e.what());
    }
    return w;
}

json wind_json(const env::WindConfig& w) {
    return {{"speed", w.speed},
            {"from_deg", w.from_deg},
            {"magnitude", w.magnitude},
            {"reference_altitude", w.reference_altitude},
            {"reference_airspeed", w.reference_airspeed},
            {"knots_per_magnitude", w.knots_per_magnitude}};
}

control::ActuatorCommands actuator_values(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != control::kChannelCount)
        throw SchemaError(path, "expected an array of 8 channel values");
    control::ActuatorCommands c;
    for (std::size_t i = 0; i < control::kChannelCount; ++i) c.values[i] = number(j[i], at(path, i));
    c.saturate();
    return c;
}

json command_json(const Command& c) {
    return std::visit(
        [](const auto& cmd) -> json {
            using T = std::decay_t<decltype(cmd)>;
            if constexpr (std::is_same_v<T, ActuatorCmd>) {
                return {{"type", "actuators"}, {"values", cmd.values.values}};
            } else if constexpr (std::is_same_v<T, ModeCmd>) {
                return {{"type", "mode"}, {"mode", mode_name(cmd.mode)}};
            } else if constexpr (std::is_same_v<T, SetpointCmd>) {
                return {{"type", "setpoint"}, {"v", vec_json(cmd.velocity)}};
            } else if constexpr (std::is_same_v<T, InflationCmd>) {
                json j{{"type", "inflation"}, {"level", cmd.setting.level}};
                if (cmd.setting.stiffness_scale) j["stiffness_scale"] = *cmd.setting.stiffness_scale;
                if (cmd.setting.buoyancy_scale) j["buoyancy_scale"] = *cmd.setting.buoyancy_scale;
                if (cmd.setting.free_play_scale) j["free_play_scale"] = *cmd.setting.free_play_scale;
                return j;
            } else if constexpr (std::is_same_v<T, WindCmd>) {
                json j{{"type", "wind"}};
                if (cmd.from_deg) j["from_deg"] = *cmd.from_deg;
                if (cmd.speed) j["speed"] = *cmd.speed;
                if (cmd.magnitude) j["magnitude"] = *cmd.magnitude;
                return j;
            } else if constexpr (std::is_same_v<T, GainsCmd>) {
                return {{"type", "gains"}, {"gains", cmd.overlay}};
            } else if constexpr (std::is_same_v<T, PauseCmd>) {
                return {{"type", "pause"}};
            } else if constexpr (std::is_same_v<T, ResumeCmd>) {
                return {{"type", "resume"}};
            } else {
                return {{"type", "timescale"}, {"factor", cmd.factor}};
            }
        },
        c);
}

}  // namespace

std::string default_vehicle_path() { return BLIMP_DEFAULT_VEHICLE; }

void ScenarioSpec::validate() const {
    if (!(duration > 0.0)) throw SchemaError("$.duration", "must be positive");
    if (!(physics_dt > 0.0)) throw SchemaError("$.physics_dt", "must be positive");
    if (control_rate && !(*control_rate > 0.0)) throw SchemaError("$.control_rate", "must be positive");
    if (!(loiter.gain > 0.0)) throw SchemaError("$.guidance.loiter.gain", "must be positive");
    if (mode == Mode::Path || !path.waypoints.empty()) {
        try {
            path.validate();
        } catch (const std::invalid_argument& e) {
            throw SchemaError("$.guidance.path", e.what());
        }
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        const std::string p = "$.events[" + std::to_string(i) + "]";
        if (!(events[i].t >= 0.0)) throw SchemaError(p + ".t", "must be non-negative");
        if (i > 0 && events[i].t < events[i - 1].t) throw SchemaError(p + ".t", "events must be time-ordered");
        if (is_session_command(events[i].command)) throw SchemaError(p + ".type", "not allowed in a timeline");
        if (std::holds_alternative<ModeCmd>(events[i].command) &&
            std::get<ModeCmd>(events[i].command).mode == Mode::Path && path.waypoints.empty())
            throw SchemaError(p, "path mode needs waypoints");
    }
}

ScenarioSpec parse_scenario(const json& doc, const std::string& base_dir) {
    const std::string root = "$";
    if (!doc.is_object()) throw SchemaError(root, "expected an object");
    ScenarioSpec s;
    if (doc.contains("name")) s.name = text(doc, "name", root);
    s.vehicle_path = resolve_vehicle(doc.contains("vehicle") ? text(doc, "vehicle", root) : default_vehicle_path(),
                                     base_dir);

    if (auto it = doc.find("start"); it != doc.end()) {
        const std::string p = at(root, "start");
        s.start_position = vec3_or(*it, "position", p, s.start_position);
        s.start_heading = number_or(*it, "heading", p, s.start_heading);
    }
    if (auto it = doc.find("wind"); it != doc.end()) s.wind = parse_wind(*it, at(root, "wind"));

    if (auto it = doc.find("guidance"); it != doc.end()) {
        const std::string p = at(root, "guidance");
        const json& g = *it;
        try {
            s.mode = mode_from_name(text(g, "mode", p));
        } catch (const std::invalid_argument& e) {
            throw SchemaError(at(p, "mode"), e.what());
        }
        if (auto l = g.find("loiter"); l != g.end()) {
            const std::string lp = at(p, "loiter");
            s.loiter.hold = vec3_or(*l, "hold", lp, s.loiter.hold);
            s.loiter.gain = number_or(*l, "gain", lp, s.loiter.gain);
        }
        if (auto pa = g.find("path"); pa != g.end()) {
            const std::string pp = at(p, "path");
            const json& wps = array(*pa, "waypoints", pp);
            for (std::size_t i = 0; i < wps.size(); ++i)
                s.path.waypoints.push_back(vec3(wps[i], at(at(pp, "waypoints"), i)));
            s.path.speed = number_or(*pa, "speed", pp, s.path.speed);
            s.path.gain = number_or(*pa, "gain", pp, s.path.gain);
            s.path.acceptance_radius = number_or(*pa, "acceptance_radius", pp, s.path.acceptance_radius);
            s.path.projected_correction = flag_or(*pa, "projected_correction", pp, false);
        }
        s.setpoint = vec3_or(g, "setpoint", p, s.setpoint);
        if (auto m = g.find("manual"); m != g.end()) s.manual = actuator_values(*m, at(p, "manual"));
    }

    if (auto it = doc.find("gains"); it != doc.end()) {
        if (!it->is_object()) throw SchemaError(at(root, "gains"), "expected an object");
        s.gains = *it;
    }
    if (auto it = doc.find("events"); it != doc.end()) {
        if (!it->is_array()) throw SchemaError(at(root, "events"), "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string p = at(at(root, "events"), i);
            const json& e = (*it)[i];
            s.events.push_back({number(e, "t", p), parse_command(e, p).command});
        }
    }
    s.duration = number_or(doc, "duration", root, s.duration);
    s.physics_dt = number_or(doc, "physics_dt", root, s.physics_dt);
    if (doc.contains("control_rate")) s.control_rate = number(doc, "control_rate", root);
    if (auto it = doc.find("seed"); it != doc.end()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
            throw SchemaError(at(root, "seed"), "expected a non-negative integer");
        s.seed = it->get<std::uint64_t>();
    }
    if (doc.contains("output")) s.output = text(doc, "output", root);
    s.wind.seed = s.seed;
    s.validate();
    return s;
}

ScenarioSpec load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path, "cannot open scenario document");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path, e.what());
    }
    return parse_scenario(doc, fs::path(path).parent_path().string());
}

json to_json(const ScenarioSpec& s) {
    json doc;
    doc["name"] = s.name;
    doc["vehicle"] = s.vehicle_path;
    doc["start"] = {{"position", vec_json(s.start_position)}, {"heading", s.start_heading}};
    doc["wind"] = wind_json(s.wind);
    json g{{"mode", mode_name(s.mode)},
           {"loiter", {{"hold", vec_json(s.loiter.hold)}, {"gain", s.loiter.gain}}},
           {"setpoint", vec_json(s.setpoint)},
           {"manual", s.manual.values}};
    if (!s.path.waypoints.empty()) {
        json wps = json::array();
        for (const Vec3& w : s.path.waypoints) wps.push_back(vec_json(w));
        g["path"] = {{"waypoints", wps},
                     {"speed", s.path.speed},
                     {"gain", s.path.gain},
                     {"acceptance_radius", s.path.acceptance_radius},
                     {"projected_correction", s.path.projected_correction}};
    }
    doc["guidance"] = g;
    doc["gains"] = s.gains;
    json events = json::array();
    for (const TimedEvent& e : s.events) {
        json j = command_json(e.command);
        j["t"] = e.t;
        events.push_back(j);
    }
    doc["events"] = events;
    doc["duration"] = s.duration;
    doc["physics_dt"] = s.physics_dt;
    if (s.control_rate) doc["control_rate"] = *s.control_rate;
    doc["seed"] = s.seed;
    doc["output"] = s.output;
    return doc;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

const Vec3 kHold{0.0, 0.0, 50.0};

json loiter_base(const std::string& name, double duration) {
    return {{"name", name},
            {"start", {{"position", {-30.0, 0.0, 50.0}}, {"heading", 0.0}}},
            {"guidance", {{"mode", "loiter"}, {"loiter", {{"hold", vec_json(kHold)}, {"gain", 0.1}}}}},
            {"duration", duration},
            {"seed", 1},
            {"output", "out/" + name}};
}

json path_base(const std::string& name, double duration) {
    const json square =
        json::array({{0.0, 0.0, 50.0}, {150.0, 0.0, 50.0}, {150.0, 150.0, 50.0}, {0.0, 150.0, 50.0}});
    return {{"name", name},
            {"start", {{"position", {0.0, 0.0, 50.0}}, {"heading", 0.0}}},
            {"guidance",
             {{"mode", "path"},
              {"path", {{"waypoints", square}, {"speed", 2.0},
                        {"gain", 0.05},
                        {"acceptance_radius", 12.0},
                        {"projected_correction", true}}}}},
            {"duration", duration},
            {"seed", 1},
            {"output", "out/" + name}};
}

const json kGustyWind = {{"speed", 1.5}, {"from_deg", 135.0}, {"magnitude", 3.0}};

// Partial deflation: stiffness 20 %, buoyancy 95 %, free play x8.
json deflation_event(double t) {
    return {{"t", t},
            {"type", "inflation"},
            {"level", 0.95},
            {"stiffness_scale", 0.2},
            {"buoyancy_scale", 0.95},
            {"free_play_scale", 8.0}};
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"exp2-loiter",         "exp3-path",         "exp4-wind-loiter",
                                                   "exp4-wind-path",      "exp5-deflate-loiter", "exp5-deflate-path",
                                                   "tune"};
    return names;
}

json preset(const std::string& name) {
    if (name == "exp2-loiter") return loiter_base(name, 300.0);
    if (name == "exp3-path") return path_base(name, 1300.0);
    if (name == "exp4-wind-loiter") {
        json j = loiter_base(name, 600.0);
        j["wind"] = kGustyWind;
        return j;
    }
    if (name == "exp4-wind-path") {
        json j = path_base(name, 600.0);
        j["wind"] = kGustyWind;
        return j;
    }
    if (name == "exp5-deflate-loiter") {
        json j = loiter_base(name, 600.0);
        j["events"] = json::array({deflation_event(300.0)});
        return j;
    }
    if (name == "exp5-deflate-path") {
        json j = path_base(name, 600.0);
        j["events"] = json::array({deflation_event(300.0)});
        return j;
    }
    if (name == "tune") {
        // Velocity-setpoint steps for tuning the loops one at a time.
        json j = {{"name", name},
                  {"start", {{"position", {0.0, 0.0, 50.0}}, {"heading", 0.0}}},
                  {"guidance", {{"mode", "setpoint"}, {"setpoint", {1.5, 0.0, 0.0}}}},
                  {"duration", 240.0},
                  {"seed", 1},
                  {"output", "out/tune"}};
        j["events"] = json::array({
            {{"t", 60.0}, {"type", "setpoint"}, {"v", {0.0, 1.5, 0.0}}},
            {{"t", 120.0}, {"type", "setpoint"}, {"v", {0.0, 1.5, 0.5}}},
            {{"t", 150.0}, {"type", "setpoint"}, {"v", {0.0, 1.5, -0.5}}},
            {{"t", 180.0}, {"type", "setpoint"}, {"v", {-2.0, 0.0, 0.0}}},
        });
        return j;
    }
    throw std::invalid_argument("unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

control::ControllerGains scenario_gains(const ScenarioSpec& spec, const vehicle::VehicleConfig& v) {
    control::ControllerGains g = vehicle::parse_gains(spec.gains, "$.gains", v.gains);
    if (spec.control_rate) g.control_period = 1.0 / *spec.control_rate;
    return g;
}

std::uint64_t ticks_per_period(double period, double dt) {
    const double ratio = period / dt;
    const auto n = static_cast<std::uint64_t>(std::llround(ratio));
    if (n == 0 || std::abs(ratio - static_cast<double>(n)) > 1e-6)
        throw SchemaError("$.control_rate", "control period must be a whole number of physics steps");
    return n;
}

std::uint64_t event_step(double t, double dt) {
    return static_cast<std::uint64_t>(std::ceil(t / dt - 1e-9));
}

}  // namespace

Simulation::Simulation(const ScenarioSpec& spec, vehicle::VehicleConfig vehicle)
    : spec_(spec),
      vehicle_(vehicle, spec.start_position, spec.start_heading),
      wind_(spec.wind),
      controller_(scenario_gains(spec, vehicle), vehicle.mixer),
      dt_(spec.physics_dt),
      steps_per_tick_(ticks_per_period(controller_.gains().control_period, spec.physics_dt)),
      mode_(spec.mode),
      setpoint_override_(spec.setpoint),
      manual_(spec.manual) {
    spec_.validate();
    control::ControllerGains g = controller_.gains();
    g.control_period = static_cast<double>(steps_per_tick_) * dt_;
    controller_.set_gains(g);
    frame_.mode = mode_;
}

void Simulation::set_mode(Mode m) {
    if (m == Mode::Path && spec_.path.waypoints.size() < 2)
        throw std::invalid_argument("path mode needs a waypoint list in the scenario");
    if (m != mode_) {
        controller_.reset();
        if (m == Mode::Path) segment_ = 0;
    }
    mode_ = m;
}

void Simulation::apply(const Command& c) {
    std::visit(
        [this](const auto& cmd) {
            using T = std::decay_t<decltype(cmd)>;
            if constexpr (std::is_same_v<T, ActuatorCmd>) {
                manual_ = cmd.values;
                manual_.saturate();
                // Manual sticks bypass the controller, so they act from the next step on.
                if (mode_ == Mode::Manual) frame_.actuators = commands_ = manual_;
            } else if constexpr (std::is_same_v<T, ModeCmd>) {
                set_mode(cmd.mode);
            } else if constexpr (std::is_same_v<T, SetpointCmd>) {
                setpoint_override_ = cmd.velocity;
                set_mode(Mode::Setpoint);
            } else if constexpr (std::is_same_v<T, InflationCmd>) {
                vehicle_.set_inflation(cmd.setting);
            } else if constexpr (std::is_same_v<T, WindCmd>) {
                env::WindConfig w = wind_.config();
                if (cmd.from_deg) w.from_deg = *cmd.from_deg;
                if (cmd.speed) w.speed = *cmd.speed;
                if (cmd.magnitude) w.magnitude = *cmd.magnitude;
                wind_.reconfigure(w);
            } else if constexpr (std::is_same_v<T, GainsCmd>) {
                control::ControllerGains g = vehicle::parse_gains(cmd.overlay, "gains", controller_.gains());
                if (g.control_period != controller_.gains().control_period)
                    throw std::invalid_argument("control_period cannot change during a run");
                controller_.set_gains(g);
            } else {
                throw std::invalid_argument("session commands are handled by the live service");
            }
        },
        c);
}

void Simulation::control_tick() {
    const vehicle::SensorReading s = vehicle_.read_sensors(wind_.current());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    TelemetryFrame& f = frame_;
    f.t = time();
    f.reference = Vec3::Constant(nan);
    f.cross_track = nan;
    f.segment = -1;

    Vec3 vs = Vec3::Zero();
    switch (mode_) {
    case Mode::Manual:
        break;
    case Mode::Loiter:
        vs = guidance::loiter_setpoint(s.position, spec_.loiter);
        f.reference = spec_.loiter.hold;
        break;
    case Mode::Path: {
        segment_ = guidance::advance_waypoint(s.position, spec_.path, segment_);
        vs = guidance::path_setpoint(s.position, spec_.path, segment_);
        const Vec3& a = spec_.path.waypoints[segment_];
        const Vec3& b = spec_.path.waypoints[(segment_ + 1) % spec_.path.waypoints.size()];
        const Vec3 u = (b - a).normalized();
        f.reference = a + u * (s.position - a).dot(u);
        f.cross_track = guidance::cross_track_error(s.position, spec_.path, segment_);
        f.segment = static_cast<int>(segment_);
        break;
    }
    case Mode::Setpoint:
        vs = setpoint_override_;
        break;
    }

    if (mode_ == Mode::Manual) {
        commands_ = manual_;
        f.setpoint = f.air_setpoint = Vec3::Zero();
        f.scale = 1.0;
        f.pitch_sp = f.yaw_rate_sp = f.thrust_sp = f.gamma = 0.0;
    } else {
        commands_ = controller_.update(s.nav, s.gyro, vs);
        const control::Setpoints& sp = controller_.setpoints();
        f.setpoint = sp.velocity;
        f.air_setpoint = sp.air_velocity;
        f.scale = sp.scale;
        f.pitch_sp = sp.pitch;
        f.yaw_rate_sp = sp.yaw_rate;
        f.thrust_sp = sp.thrust;
        f.gamma = sp.gamma;
    }

    f.position = s.position;
    f.attitude = s.nav.attitude;
    f.velocity = s.nav.velocity;
    f.air_velocity = s.nav.velocity - wind_.current();
    f.airspeed = s.nav.airspeed.value_or(nan);
    f.wind = wind_.current();
    f.actuators = commands_;
    f.gyro = s.gyro;
    f.inflation = vehicle_.inflation().level;
    f.mode = mode_;
}

bool Simulation::step() {
    for (const TimedEvent& e : spec_.events)
        if (event_step(e.t, dt_) == step_) apply(e.command);

    const bool tick = step_ % steps_per_tick_ == 0;
    if (tick) control_tick();

    std::vector<Wrench> wrenches = vehicle_.actuate(commands_, dt_);
    const std::vector<Wrench> aero = vehicle_.aero_wrenches(wind_.current());
    const std::vector<Wrench> lift = vehicle_.buoyancy_wrenches();
    wrenches.insert(wrenches.end(), aero.begin(), aero.end());
    wrenches.insert(wrenches.end(), lift.begin(), lift.end());
    vehicle_.world().step(dt_, wrenches);
    wind_.advance(dt_);
    ++step_;
    return tick;
}

RunResult run(const ScenarioSpec& spec) {
    Simulation sim(spec, vehicle::load_vehicle_file(spec.vehicle_path));
    RunResult r;
    const auto steps = static_cast<std::uint64_t>(std::llround(spec.duration / spec.physics_dt));
    r.frames.reserve(steps / 10 + 1);
    while (sim.step_count() < steps)
        if (sim.step()) r.frames.push_back(sim.frame());
    r.summary = summarize(to_table(r.frames));
    r.summary["scenario"] = spec.name;
    r.summary["seed"] = spec.seed;
    return r;
}

void write_outputs(const RunResult& r, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream csv(fs::path(dir) / "telemetry.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (fs::path(dir) / "telemetry.csv").string());
    csv << csv_header() << '\n';
    for (const TelemetryFrame& f : r.frames) csv << csv_row(f) << '\n';
    std::ofstream sum(fs::path(dir) / "summary.json");
    sum << r.summary.dump(2) << '\n';
    if (!csv || !sum) throw std::runtime_error("failed writing outputs to " + dir);
}

}  // namespace blimp::scenario
