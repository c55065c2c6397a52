#pragma once

#include "blimp/aero.hpp"
#include "blimp/control.hpp"
#include "blimp/environment.hpp"
#include "blimp/multibody.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace blimp::vehicle {

struct BodyConfig {
    BodyPrimitive body;
    Vec3 position = Vec3::Zero();   // m, centre of mass in the vehicle frame
    Vec3 rpy = Vec3::Zero();        // rad, orientation in the vehicle frame (intrinsic XYZ)
};

/// Joint constants derived from a target natural frequency and damping ratio
/// using the reduced mass and reduced inertia about the anchor.
struct RigidPreset {
    double frequency_hz = 20.0;
    double damping_ratio = 0.7;
};

struct JointConfig {
    JointSpec spec;                 // parent_anchor is read from "anchor"
    Vec3 rpy = Vec3::Zero();        // joint axes relative to the parent body frame
    std::optional<RigidPreset> rigid;
};

struct AeroBinding {
    std::string body;
    aero::AeroPrimitive primitive;
};

struct ThrusterConfig {
    std::string name;
    control::Channel channel = control::Channel::LeftMain;
    std::string body;
    double max_thrust = 1.0;                 // N
    Vec3 axis = Vec3::UnitX();               // body frame
};

/// Drives the rotational target of one or more joints about a joint axis.
struct ServoConfig {
    std::string name;
    control::Channel channel = control::Channel::TopRudder;
    std::vector<std::string> joints;
    int axis = 1;                  // joint axis index 0..2
    double max_angle = 0.5;        // rad at |command| = 1
    double rate_limit = 3.0;       // rad/s
    double sign = 1.0;
};

struct SensorConfig {
    std::string reference_body;
    Vec3 reference_point = Vec3::Zero();   // body frame
    std::string imu_body;
    Vec3 imu_rpy = Vec3::Zero();           // sensor axes relative to the imu body frame
    std::string airspeed_body;
    bool airspeed_enabled = true;
};

/// Scale laws: stiffness s^p, buoyancy s^q, free play 1 + slope (1 - s).
struct InflationLaw {
    double stiffness_power = 2.0;
    double buoyancy_power = 1.0;
    double free_play_slope = 1.0;
};

struct VehicleConfig {
    std::string name = "vehicle";
    std::vector<BodyConfig> bodies;
    std::vector<JointConfig> joints;
    std::vector<AeroBinding> aero;
    std::vector<env::BuoyancySection> buoyancy;
    std::vector<ThrusterConfig> thrusters;
    std::vector<ServoConfig> servos;
    SensorConfig sensors;
    control::ControllerGains gains;
    control::MixerConfig mixer = control::MixerConfig::standard();
    InflationLaw inflation;
};

/// Parse and validate. Throws SchemaError (with a JSON path), DanglingReference
/// or NonPositiveMass.
VehicleConfig parse_vehicle(const nlohmann::json& doc);
VehicleConfig load_vehicle_file(const std::string& path);
nlohmann::json to_json(const VehicleConfig& config);

/// Gains are also accepted on their own (hot reload); absent keys keep `base`.
control::ControllerGains parse_gains(const nlohmann::json& doc, const std::string& path = "gains",
                                     const control::ControllerGains& base = {});
nlohmann::json gains_to_json(const control::ControllerGains& gains);

struct InflationSetting {
    double level = 1.0;
    std::optional<double> stiffness_scale;
    std::optional<double> buoyancy_scale;
    std::optional<double> free_play_scale;
};

struct InflationState {
    double level = 1.0;
    double stiffness_scale = 1.0;
    double free_play_scale = 1.0;
    double buoyancy_scale = 1.0;
};

InflationState inflation_scales(const InflationSetting& setting, const InflationLaw& law);

struct SensorReading {
    control::NavState nav;
    Vec3 position = Vec3::Zero();     // reference point, world
    Vec3 gyro = Vec3::Zero();         // imu body rate in sensor axes
    Vec3 hull_rate = Vec3::Zero();    // reference body rate in sensor-aligned vehicle axes
};

struct TrimReport {
    double total_mass = 0.0;        // kg
    double weight = 0.0;            // N
    double buoyancy = 0.0;          // N
    double net_vertical = 0.0;      // N, buoyancy - weight
    Vec3 center_of_mass = Vec3::Zero();
    double length = 0.0;            // m, extent along world x at assembly
};

/// Assembled vehicle: the multibody world plus aero, buoyancy, actuator and
/// sensor bindings. Mutated only between physics steps.
class Vehicle {
public:
    /// Assemble with the vehicle frame placed at `origin`, rotated by `heading` about world z.
    explicit Vehicle(VehicleConfig config, const Vec3& origin = Vec3::Zero(), double heading = 0.0);

    World& world() { return world_; }
    const World& world() const { return world_; }
    const VehicleConfig& config() const { return config_; }

    TrimReport trim_report() const;

    /// Apply a new inflation level atomically. Throws OutOfRange for s outside [0, 1].
    void set_inflation(const InflationSetting& setting);
    const InflationState& inflation() const { return inflation_; }

    /// Slew servos toward their commanded angles and return thruster wrenches.
    std::vector<Wrench> actuate(const control::ActuatorCommands& cmds, double dt);
    double servo_angle(std::size_t servo) const { return servo_angles_.at(servo); }
    const control::ActuatorCommands& last_commands() const { return last_commands_; }

    std::vector<Wrench> aero_wrenches(const Vec3& wind) const;
    std::vector<Wrench> buoyancy_wrenches(double air_density = kSeaLevelDensity) const;

    SensorReading read_sensors(const Vec3& wind) const;

    /// Euler angles (roll, pitch nose-up, yaw CCW from east) of a body.
    static Vec3 attitude_of(const Quat& q);

    /// Nominal (fully inflated) values of the deformable joints and buoyancy.
    const std::vector<JointSpec>& nominal_joints() const { return nominal_joints_; }

private:
    struct ThrusterBinding {
        BodyId body;
        double max_thrust;
        Vec3 axis;
        control::Channel channel;
    };
    struct ServoBinding {
        std::vector<JointId> joints;
        ServoConfig config;
    };

    VehicleConfig config_;
    World world_;
    std::vector<JointSpec> nominal_joints_;   // indexed like world joints
    std::vector<BodyId> aero_bodies_;
    std::vector<BodyId> buoyancy_bodies_;
    std::vector<env::BuoyancySection> buoyancy_;
    std::vector<ThrusterBinding> thrusters_;
    std::vector<ServoBinding> servos_;
    std::vector<double> servo_angles_;
    control::ActuatorCommands last_commands_;
    InflationState inflation_;
    BodyId reference_;
    BodyId imu_;
    BodyId airspeed_body_;
    Quat imu_mount_ = Quat::Identity();
};

}  // namespace blimp::vehicle
