#include "blimp/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blimp::vehicle {

namespace {

/// Moment of inertia of a body about the axis through `pivot` along `axis` (world).
double inertia_about(const BodyPrimitive& b, const BodyState& s, const Vec3& pivot, const Vec3& axis) {
    const Mat3 r = s.orientation.toRotationMatrix();
    const Mat3 world_inertia = r * b.inertia * r.transpose();
    const Vec3 d = s.position - pivot;
    const Vec3 perp = d - axis * d.dot(axis);
    return axis.dot(world_inertia * axis) + b.mass * perp.squaredNorm();
}

void apply_rigid_preset(JointSpec& j, const RigidPreset& preset, const BodyPrimitive& pb, const BodyState& ps,
                        const BodyPrimitive& cb, const BodyState& cs) {
    const double w = 2.0 * kPi * preset.frequency_hz;
    const double mu = pb.mass * cb.mass / (pb.mass + cb.mass);
    const Vec3 anchor = ps.to_world(j.parent_anchor);
    const Mat3 axes = (ps.orientation * j.parent_frame).toRotationMatrix();
    for (int i = 0; i < 3; ++i) {
        j.k_lin[i] = mu * w * w;
        j.c_lin[i] = 2.0 * preset.damping_ratio * mu * w;
        const Vec3 e = axes.col(i);
        const double jp = inertia_about(pb, ps, anchor, e);
        const double jc = inertia_about(cb, cs, anchor, e);
        const double jr = jp * jc / (jp + jc);
        j.k_rot[i] = jr * w * w;
        j.c_rot[i] = 2.0 * preset.damping_ratio * jr * w;
    }
}

}  // namespace

InflationState inflation_scales(const InflationSetting& s, const InflationLaw& law) {
    if (!(s.level >= 0.0 && s.level <= 1.0)) throw OutOfRange("inflation level must lie in [0, 1]");
    for (const auto* o : {&s.stiffness_scale, &s.buoyancy_scale, &s.free_play_scale})
        if (*o && !(**o >= 0.0)) throw OutOfRange("inflation scale overrides must be non-negative");
    InflationState st;
    st.level = s.level;
    st.stiffness_scale = s.stiffness_scale.value_or(std::pow(s.level, law.stiffness_power));
    st.buoyancy_scale = s.buoyancy_scale.value_or(std::pow(s.level, law.buoyancy_power));
    st.free_play_scale = s.free_play_scale.value_or(1.0 + law.free_play_slope * (1.0 - s.level));
    return st;
}

Vec3 Vehicle::attitude_of(const Quat& q) {
    const Mat3 r = q.toRotationMatrix();
    const double pitch = std::asin(std::clamp(r(2, 0), -1.0, 1.0));
    return {std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
}

Vehicle::Vehicle(VehicleConfig config, const Vec3& origin, double heading) : config_(std::move(config)) {
    const Quat yaw(Eigen::AngleAxisd(heading, Vec3::UnitZ()));
    for (const BodyConfig& b : config_.bodies) {
        BodyState s;
        s.position = origin + yaw * b.position;
        s.orientation = yaw * from_intrinsic_xyz(b.rpy);
        world_.add_body(b.body, s);
    }

    for (const JointConfig& jc : config_.joints) {
        JointSpec spec = jc.spec;
        const BodyId pid = world_.find_body(spec.parent);
        const BodyId cid = world_.find_body(spec.child);
        const BodyState& ps = world_.state(pid);
        const BodyState& cs = world_.state(cid);
        spec.parent_frame = from_intrinsic_xyz(jc.rpy);
        const Quat joint_world = ps.orientation * spec.parent_frame;
        const Vec3 anchor_world = ps.to_world(spec.parent_anchor);
        spec.child_anchor = cs.orientation.conjugate() * (anchor_world - cs.position);
        spec.child_frame = cs.orientation.conjugate() * joint_world;
        if (jc.rigid) apply_rigid_preset(spec, *jc.rigid, world_.body(pid), ps, world_.body(cid), cs);
        world_.add_joint(spec);
        nominal_joints_.push_back(spec);
    }

    for (const AeroBinding& a : config_.aero) aero_bodies_.push_back(world_.find_body(a.body));
    for (const env::BuoyancySection& b : config_.buoyancy) buoyancy_bodies_.push_back(world_.find_body(b.body));
    buoyancy_ = config_.buoyancy;

    for (const ThrusterConfig& t : config_.thrusters)
        thrusters_.push_back({world_.find_body(t.body), t.max_thrust, t.axis.normalized(), t.channel});
    for (const ServoConfig& s : config_.servos) {
        ServoBinding b{{}, s};
        for (const std::string& jn : s.joints) b.joints.push_back(world_.find_joint(jn));
        servos_.push_back(std::move(b));
    }
    servo_angles_.assign(servos_.size(), 0.0);

    reference_ = world_.find_body(config_.sensors.reference_body);
    imu_ = world_.find_body(config_.sensors.imu_body);
    airspeed_body_ = world_.find_body(config_.sensors.airspeed_body);
    imu_mount_ = from_intrinsic_xyz(config_.sensors.imu_rpy);
}

TrimReport Vehicle::trim_report() const {
    TrimReport r;
    r.total_mass = world_.total_mass();
    r.weight = r.total_mass * kGravity;
    for (const env::BuoyancySection& b : buoyancy_) r.buoyancy += b.coefficient * b.volume * kSeaLevelDensity * kGravity;
    r.net_vertical = r.buoyancy - r.weight;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < world_.body_count(); ++i) {
        const BodyPrimitive& b = world_.body(BodyId{i});
        const BodyState& s = world_.state(BodyId{i});
        r.center_of_mass += b.mass * s.position;
        lo = std::min(lo, s.position.x() - 0.5 * b.shape.dims.x());
        hi = std::max(hi, s.position.x() + 0.5 * b.shape.dims.x());
    }
    r.center_of_mass /= r.total_mass;
    r.length = hi - lo;
    return r;
}

void Vehicle::set_inflation(const InflationSetting& setting) {
    const InflationState st = inflation_scales(setting, config_.inflation);
    for (std::size_t i = 0; i < nominal_joints_.size(); ++i) {
        const JointSpec& nominal = nominal_joints_[i];
        if (!nominal.deformable) continue;
        JointSpec& j = world_.joint(JointId{i});
        j.k_lin = nominal.k_lin * st.stiffness_scale;
        j.c_lin = nominal.c_lin * st.stiffness_scale;
        j.k_rot = nominal.k_rot * st.stiffness_scale;
        j.c_rot = nominal.c_rot * st.stiffness_scale;
        j.free_play_lin = nominal.free_play_lin * st.free_play_scale;
        j.free_play_rot = nominal.free_play_rot * st.free_play_scale;
    }
    for (std::size_t i = 0; i < buoyancy_.size(); ++i)
        buoyancy_[i].coefficient = config_.buoyancy[i].coefficient * st.buoyancy_scale;
    inflation_ = st;
}

std::vector<Wrench> Vehicle::actuate(const control::ActuatorCommands& cmds, double dt) {
    last_commands_ = cmds;
    last_commands_.saturate();
    for (std::size_t i = 0; i < servos_.size(); ++i) {
        const ServoConfig& sc = servos_[i].config;
        const double target = last_commands_[sc.channel] * sc.max_angle;
        const double max_step = sc.rate_limit * dt;
        servo_angles_[i] += std::clamp(target - servo_angles_[i], -max_step, max_step);
        for (JointId j : servos_[i].joints) world_.joint(j).rot_target[sc.axis] = sc.sign * servo_angles_[i];
    }

    std::vector<Wrench> out;
    out.reserve(thrusters_.size());
    for (const ThrusterBinding& t : thrusters_) {
        const BodyState& s = world_.state(t.body);
        const Vec3 f = (last_commands_[t.channel] * t.max_thrust) * (s.orientation * t.axis);
        out.push_back(Wrench{f, Vec3::Zero(), t.body});
    }
    return out;
}

std::vector<Wrench> Vehicle::aero_wrenches(const Vec3& wind) const {
    std::vector<Wrench> out;
    out.reserve(aero_bodies_.size());
    for (std::size_t i = 0; i < aero_bodies_.size(); ++i) {
        const BodyState& s = world_.state(aero_bodies_[i]);
        const Vec3 flow = s.orientation.conjugate() * (wind - s.velocity);
        const aero::AeroResult r = aero::aero_force(config_.aero[i].primitive, flow);
        out.push_back(Wrench{s.orientation * r.total(), Vec3::Zero(), aero_bodies_[i]});
    }
    return out;
}

std::vector<Wrench> Vehicle::buoyancy_wrenches(double rho) const {
    std::vector<Wrench> out;
    out.reserve(buoyancy_.size());
    for (std::size_t i = 0; i < buoyancy_.size(); ++i)
        out.push_back(env::buoyancy_wrench(buoyancy_[i], buoyancy_bodies_[i], world_.state(buoyancy_bodies_[i]), rho));
    return out;
}

SensorReading Vehicle::read_sensors(const Vec3& wind) const {
    SensorReading r;
    const BodyState& ref = world_.state(reference_);
    const Vec3& point = config_.sensors.reference_point;
    r.position = ref.to_world(point);
    r.nav.velocity = ref.point_velocity(point);
    r.nav.attitude = attitude_of(ref.orientation);
    if (config_.sensors.airspeed_enabled) {
        const BodyState& as = world_.state(airspeed_body_);
        r.nav.airspeed = (as.velocity - wind).dot(as.orientation * Vec3::UnitX());
    }
    r.gyro = imu_mount_.conjugate() * world_.state(imu_).angular_velocity;
    r.hull_rate = ref.angular_velocity;
    return r;
}

}  // namespace blimp::vehicle
