#pragma once

#include "blimp/types.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace blimp::control {

/// Controller inputs. Euler angles are roll (right wing down +), pitch (nose
/// up +) and yaw (counter-clockwise from east +) in the ENU world frame.
struct NavState {
    Vec3 velocity = Vec3::Zero();        // m/s, world
    std::optional<double> airspeed;      // m/s, absent without a working sensor
    Vec3 attitude = Vec3::Zero();        // rad, (roll, pitch, yaw)
};

/// Unit forward axis of the vehicle in the world frame.
Vec3 forward_axis(const Vec3& attitude);

struct ControllerGains {
    // direction, C_d
    double yaw_rate_kp = 0.5;           // (rad/s)/rad
    double turn_rate_limit = 10.0 * kPi / 180.0;   // rad/s
    // climb rate, C_h
    double pitch_kp = 0.4;              // rad/(m/s)
    double pitch_ki = 0.05;             // rad/(m/s s)
    double pitch_i_limit = 0.3;         // rad
    double pitch_limit = 0.35;          // rad, attitude safety clamp
    // airspeed, C_v
    double thrust_kp = 0.3;
    double thrust_ki = 0.05;
    double thrust_i_limit = 0.5;
    double pitch_thrust_kp = 0.0;       // thrust per rad of pitch setpoint
    // thrust vector, C_gamma
    double gamma_kp = 0.0;              // rad/rad
    double v_min = 1.0;                 // m/s
    double v_max = 2.0;                 // m/s
    // inner loops
    double pitch_angle_kp = 1.0;        // (rad/s)/rad
    double pitch_rate_kp = 1.0;
    double pitch_rate_ki = 0.2;
    double pitch_rate_i_limit = 0.5;
    double yaw_rate_loop_kp = 2.0;
    double yaw_rate_loop_ki = 0.5;
    double yaw_rate_loop_i_limit = 0.5;
    double control_period = 0.02;       // s

    void validate() const;
};

/// Integral accumulator clamped to +-limit after every addition.
struct PiState {
    double integral = 0.0;

    double accumulate(double increment, double limit) {
        integral = clamp_sym(integral + increment, limit);
        return integral;
    }
};

struct CorrectedSetpoint {
    Vec3 air_velocity = Vec3::Zero();   // wind-corrected setpoint in air
    double scale = 1.0;                 // b
};

/// Estimated wind: world velocity minus the airspeed rotated along the body
/// forward axis. Without a sensor the airspeed is the forward component of v.
Vec3 estimate_flow(const Vec3& velocity, const Vec3& attitude, std::optional<double> airspeed);

/// Scale the ground-velocity setpoint so that the resulting air-velocity
/// setpoint b*vS - f has a magnitude inside [v_min, v_max].
CorrectedSetpoint correct_setpoint(const Vec3& setpoint, const Vec3& flow, const ControllerGains& gains,
                                   double heading = 0.0);

/// Signed horizontal angle from `from` to `to`, counter-clockwise positive.
double signed_horizontal_angle(const Vec3& to, const Vec3& from);

double direction_cmd(const Vec3& air_setpoint, const Vec3& air_velocity, const ControllerGains& gains);
double climb_cmd(const Vec3& air_setpoint, const Vec3& air_velocity, const ControllerGains& gains, PiState& pi,
                 double dt);
double thrust_cmd(const Vec3& air_setpoint, const Vec3& air_velocity, double pitch_setpoint,
                  const ControllerGains& gains, PiState& pi, double dt);
double thrust_vector_cmd(double pitch_setpoint, const ControllerGains& gains);

struct VirtualAxes {
    double pitch = 0.0;
    double yaw = 0.0;
    double thrust = 0.0;
};

struct RateLoopState {
    PiState pitch_rate;
    PiState yaw_rate;
};

/// Inner loops. `gyro` is the body-rate measurement in vehicle axes (x fwd,
/// y left, z up); pitch rate (nose up +) is therefore -gyro.y.
VirtualAxes rate_loops(double yaw_rate_setpoint, double pitch_setpoint, double thrust, const Vec3& gyro,
                       const Vec3& attitude, const ControllerGains& gains, RateLoopState& state, double dt);

enum class Channel : std::size_t {
    YawThruster = 0,
    TopRudder,
    BottomRudder,
    LeftElevator,
    RightElevator,
    ThrustVector,
    LeftMain,
    RightMain,
};
inline constexpr std::size_t kChannelCount = 8;

std::string_view channel_name(Channel c);
/// Throws std::invalid_argument for an unknown name.
Channel channel_from_name(std::string_view name);

struct ActuatorCommands {
    std::array<double, kChannelCount> values{};

    double& operator[](Channel c) { return values[static_cast<std::size_t>(c)]; }
    double operator[](Channel c) const { return values[static_cast<std::size_t>(c)]; }
    /// Clamp every channel to [-1, 1]; returns true when anything was clipped.
    bool saturate();
};

/// Virtual-axis to actuator matrix. Rows are channels, columns (pitch, yaw, thrust).
struct MixerConfig {
    std::array<std::array<double, 3>, kChannelCount> matrix{};
    double thrust_vector_range = kPi / 2.0;   // rad of gamma per unit command

    static MixerConfig standard();
};

ActuatorCommands mix(const VirtualAxes& axes, double gamma, const MixerConfig& mixer);

/// Everything the outer loops produce in one control tick.
struct Setpoints {
    Vec3 velocity = Vec3::Zero();         // vS, ground frame
    Vec3 air_velocity = Vec3::Zero();     // corrected setpoint in air
    double scale = 1.0;                   // b
    Vec3 flow = Vec3::Zero();             // estimated wind
    Vec3 measured_air_velocity = Vec3::Zero();
    double pitch = 0.0;                   // P
    double yaw_rate = 0.0;                // Ydot
    double thrust = 0.0;                  // T
    double gamma = 0.0;
    VirtualAxes axes;
};

/// Cascaded outer and inner loops with their integrator state.
class Controller {
public:
    Controller(ControllerGains gains, MixerConfig mixer) : gains_(gains), mixer_(mixer) { gains_.validate(); }

    /// Run one tick with the tick length taken from the gains.
    ActuatorCommands update(const NavState& nav, const Vec3& gyro, const Vec3& velocity_setpoint);

    const Setpoints& setpoints() const { return setpoints_; }
    const ControllerGains& gains() const { return gains_; }
    void set_gains(const ControllerGains& g) {
        g.validate();
        gains_ = g;
    }
    const MixerConfig& mixer() const { return mixer_; }
    void reset();

    const PiState& climb_state() const { return climb_; }
    const PiState& speed_state() const { return speed_; }
    const RateLoopState& rate_state() const { return rates_; }

private:
    ControllerGains gains_;
    MixerConfig mixer_;
    PiState climb_;
    PiState speed_;
    RateLoopState rates_;
    Setpoints setpoints_;
};

}  // namespace blimp::control
