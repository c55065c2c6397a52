#include "blimp/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace blimp::control {

namespace {
constexpr double kDirectionEpsilon = 1e-3;   // m/s
constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "yaw_thruster", "top_rudder", "bottom_rudder", "left_elevator",
    "right_elevator", "thrust_vector", "left_main", "right_main"};
}  // namespace

void ControllerGains::validate() const {
    if (!(v_min > 0.0)) throw std::invalid_argument("v_min must be positive");
    if (!(v_max > v_min)) throw std::invalid_argument("v_max must exceed v_min");
    if (!(pitch_i_limit > 0.0 && thrust_i_limit > 0.0 && pitch_rate_i_limit > 0.0 && yaw_rate_loop_i_limit > 0.0))
        throw std::invalid_argument("integral clamps must be positive");
    if (!(turn_rate_limit > 0.0 && pitch_limit > 0.0)) throw std::invalid_argument("command limits must be positive");
    if (!(control_period > 0.0)) throw std::invalid_argument("control period must be positive");
}

Vec3 forward_axis(const Vec3& att) {
    const double cp = std::cos(att.y());
    return {cp * std::cos(att.z()), cp * std::sin(att.z()), std::sin(att.y())};
}

Vec3 estimate_flow(const Vec3& velocity, const Vec3& attitude, std::optional<double> airspeed) {
    const Vec3 fwd = forward_axis(attitude);
    const double v_i = airspeed ? *airspeed : velocity.dot(fwd);
    return velocity - v_i * fwd;
}

CorrectedSetpoint correct_setpoint(const Vec3& vs, const Vec3& f, const ControllerGains& g, double heading) {
    CorrectedSetpoint out;
    const double vs_sq = vs.squaredNorm();
    if (vs_sq == 0.0) {
        out.scale = 0.0;
        const double fn = f.norm();
        if (fn > 0.0)
            out.air_velocity = -f / fn * std::clamp(fn, g.v_min, g.v_max);
        else
            out.air_velocity = g.v_min * Vec3(std::cos(heading), std::sin(heading), 0.0);
        return out;
    }

    const double len = (vs - f).norm();
    if (len >= g.v_min && len <= g.v_max) {
        out.scale = 1.0;
        out.air_velocity = vs - f;
        return out;
    }

    // |b vs - f|^2 = limit^2, take the largest non-negative root
    const double limit = len < g.v_min ? g.v_min : g.v_max;
    const double vf = vs.dot(f);
    const double disc = vf * vf - vs_sq * (f.squaredNorm() - limit * limit);
    double b = -1.0;
    if (disc >= 0.0) b = (vf + std::sqrt(disc)) / vs_sq;
    if (!(b >= 0.0)) b = std::max(0.0, vf / vs_sq);   // closest approach when no root exists
    out.scale = b;
    out.air_velocity = b * vs - f;
    return out;
}

double signed_horizontal_angle(const Vec3& to, const Vec3& from) {
    const double cross = from.x() * to.y() - from.y() * to.x();
    const double dot = from.x() * to.x() + from.y() * to.y();
    double a = std::atan2(cross, dot);
    if (a == -kPi) a = kPi;
    return a;
}

double direction_cmd(const Vec3& sp, const Vec3& cur, const ControllerGains& g) {
    if (std::hypot(sp.x(), sp.y()) < kDirectionEpsilon || std::hypot(cur.x(), cur.y()) < kDirectionEpsilon)
        return 0.0;
    return clamp_sym(g.yaw_rate_kp * signed_horizontal_angle(sp, cur), g.turn_rate_limit);
}

double climb_cmd(const Vec3& sp, const Vec3& cur, const ControllerGains& g, PiState& pi, double dt) {
    const double e = sp.z() - cur.z();
    const double i = pi.accumulate(g.pitch_ki * e * dt, g.pitch_i_limit);
    return clamp_sym(g.pitch_kp * e + i, g.pitch_limit);
}

double thrust_cmd(const Vec3& sp, const Vec3& cur, double pitch, const ControllerGains& g, PiState& pi,
                  double dt) {
    const double e = sp.norm() - cur.norm();
    const double i = pi.accumulate(g.thrust_ki * e * dt, g.thrust_i_limit);
    return clamp_sym(g.thrust_kp * e + i + g.pitch_thrust_kp * pitch, 1.0);
}

double thrust_vector_cmd(double pitch, const ControllerGains& g) {
    return std::clamp(g.gamma_kp * pitch, 0.0, kPi / 2.0);
}

VirtualAxes rate_loops(double yaw_rate_sp, double pitch_sp, double thrust, const Vec3& gyro, const Vec3& attitude,
                       const ControllerGains& g, RateLoopState& s, double dt) {
    VirtualAxes out;
    const double pitch_rate_sp = g.pitch_angle_kp * (pitch_sp - attitude.y());
    const double pitch_err = pitch_rate_sp - (-gyro.y());
    out.pitch = g.pitch_rate_kp * pitch_err +
                s.pitch_rate.accumulate(g.pitch_rate_ki * pitch_err * dt, g.pitch_rate_i_limit);

    const double yaw_err = yaw_rate_sp - gyro.z();
    out.yaw = g.yaw_rate_loop_kp * yaw_err +
              s.yaw_rate.accumulate(g.yaw_rate_loop_ki * yaw_err * dt, g.yaw_rate_loop_i_limit);
    out.thrust = thrust;
    return out;
}

std::string_view channel_name(Channel c) { return kChannelNames.at(static_cast<std::size_t>(c)); }

Channel channel_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kChannelCount; ++i)
        if (kChannelNames[i] == name) return static_cast<Channel>(i);
    throw std::invalid_argument("unknown actuator channel '" + std::string(name) + "'");
}

bool ActuatorCommands::saturate() {
    bool clipped = false;
    for (double& v : values) {
        const double c = std::clamp(v, -1.0, 1.0);
        clipped = clipped || c != v;
        v = c;
    }
    return clipped;
}

MixerConfig MixerConfig::standard() {
    MixerConfig m;
    auto row = [&m](Channel c) -> std::array<double, 3>& { return m.matrix[static_cast<std::size_t>(c)]; };
    row(Channel::LeftElevator) = {1.0, 0.0, 0.0};
    row(Channel::RightElevator) = {1.0, 0.0, 0.0};
    row(Channel::YawThruster) = {0.0, 1.0, 0.0};
    row(Channel::TopRudder) = {0.0, 1.0, 0.0};
    row(Channel::BottomRudder) = {0.0, 1.0, 0.0};
    row(Channel::LeftMain) = {0.0, 0.0, 1.0};
    row(Channel::RightMain) = {0.0, 0.0, 1.0};
    return m;
}

ActuatorCommands mix(const VirtualAxes& axes, double gamma, const MixerConfig& mixer) {
    ActuatorCommands out;
    for (std::size_t i = 0; i < kChannelCount; ++i) {
        const auto& r = mixer.matrix[i];
        out.values[i] = r[0] * axes.pitch + r[1] * axes.yaw + r[2] * axes.thrust;
    }
    out[Channel::ThrustVector] += gamma / mixer.thrust_vector_range;
    out.saturate();
    return out;
}

ActuatorCommands Controller::update(const NavState& nav, const Vec3& gyro, const Vec3& vs) {
    const double dt = gains_.control_period;
    Setpoints& s = setpoints_;
    s.velocity = vs;
    s.flow = estimate_flow(nav.velocity, nav.attitude, nav.airspeed);
    s.measured_air_velocity = nav.velocity - s.flow;

    const CorrectedSetpoint c = correct_setpoint(vs, s.flow, gains_, nav.attitude.z());
    s.air_velocity = c.air_velocity;
    s.scale = c.scale;

    s.yaw_rate = direction_cmd(s.air_velocity, s.measured_air_velocity, gains_);
    s.pitch = climb_cmd(s.air_velocity, s.measured_air_velocity, gains_, climb_, dt);
    s.thrust = thrust_cmd(s.air_velocity, s.measured_air_velocity, s.pitch, gains_, speed_, dt);
    s.gamma = thrust_vector_cmd(s.pitch, gains_);
    s.axes = rate_loops(s.yaw_rate, s.pitch, s.thrust, gyro, nav.attitude, gains_, rates_, dt);
    return mix(s.axes, s.gamma, mixer_);
}

void Controller::reset() {
    climb_ = {};
    speed_ = {};
    rates_ = {};
    setpoints_ = {};
}

}  // namespace blimp::control
