#pragma once

#include "blimp/control.hpp"
#include "blimp/environment.hpp"
#include "blimp/guidance.hpp"
#include "blimp/vehicle.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace blimp::scenario {

enum class Mode { Manual, Loiter, Path, Setpoint };

std::string_view mode_name(Mode m);
/// Throws std::invalid_argument for an unknown name.
Mode mode_from_name(std::string_view name);

// Operator and timeline commands. The wire form is a JSON object with a
// "type" field; see docs/protocol.md.
struct ActuatorCmd {
    control::ActuatorCommands values;
};
struct ModeCmd {
    Mode mode = Mode::Loiter;
};
struct SetpointCmd {
    Vec3 velocity = Vec3::Zero();
};
struct InflationCmd {
    vehicle::InflationSetting setting;
};
/// Absent fields keep their current value.
struct WindCmd {
    std::optional<double> from_deg;
    std::optional<double> speed;
    std::optional<double> magnitude;
};
struct GainsCmd {
    nlohmann::json overlay;
};
struct PauseCmd {};
struct ResumeCmd {};
struct TimescaleCmd {
    double factor = 1.0;
};

using Command = std::variant<ActuatorCmd, ModeCmd, SetpointCmd, InflationCmd, WindCmd, GainsCmd, PauseCmd, ResumeCmd,
                             TimescaleCmd>;

struct ParsedCommand {
    Command command;
    bool clamped = false;   // an out-of-range value was clamped
    std::string detail;
};

/// Validate and decode one command object. Throws SchemaError.
ParsedCommand parse_command(const nlohmann::json& doc, const std::string& path = "$");

/// Pause, resume and time scale only make sense for a live session.
bool is_session_command(const Command& c);

struct TimedEvent {
    double t = 0.0;   // s
    Command command;
};

struct ScenarioSpec {
    std::string name = "scenario";
    std::string vehicle_path;            // resolved against the scenario file directory
    Vec3 start_position{0.0, 0.0, 50.0};
    double start_heading = 0.0;          // rad, counter-clockwise from east
    env::WindConfig wind;
    Mode mode = Mode::Loiter;
    guidance::LoiterSpec loiter;
    guidance::PathSpec path;
    Vec3 setpoint = Vec3::Zero();        // used in setpoint mode
    control::ActuatorCommands manual;    // used in manual mode
    nlohmann::json gains = nlohmann::json::object();   // overlay on the vehicle gains
    std::vector<TimedEvent> events;
    double duration = 300.0;             // s
    double physics_dt = 0.001;           // s
    std::optional<double> control_rate;  // Hz, defaults to the vehicle gains
    std::uint64_t seed = 1;
    std::string output = "out";

    void validate() const;
};

/// Throws SchemaError. `base_dir` resolves a relative vehicle path.
ScenarioSpec parse_scenario(const nlohmann::json& doc, const std::string& base_dir = ".");
ScenarioSpec load_scenario_file(const std::string& path);
nlohmann::json to_json(const ScenarioSpec& spec);

/// Names of the built-in presets.
const std::vector<std::string>& preset_names();
/// Preset scenario document. Throws std::invalid_argument for an unknown name.
nlohmann::json preset(const std::string& name);

/// Reference blimp description shipped with the sources.
std::string default_vehicle_path();

struct TelemetryFrame {
    double t = 0.0;
    Vec3 position = Vec3::Zero();
    Vec3 attitude = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 air_velocity = Vec3::Zero();     // true, reference point minus wind
    double airspeed = 0.0;                // sensor reading, NaN when absent
    Vec3 wind = Vec3::Zero();
    Vec3 setpoint = Vec3::Zero();         // vS
    Vec3 air_setpoint = Vec3::Zero();     // corrected
    double scale = 1.0;                   // b
    double pitch_sp = 0.0;
    double yaw_rate_sp = 0.0;
    double thrust_sp = 0.0;
    double gamma = 0.0;
    control::ActuatorCommands actuators;
    Vec3 gyro = Vec3::Zero();             // fin gyro, sensor axes
    double inflation = 1.0;
    Mode mode = Mode::Loiter;
    int segment = -1;                     // active path segment, -1 outside path mode
    Vec3 reference = Vec3::Zero();        // guidance reference point, NaN without one
    double cross_track = 0.0;             // m, NaN outside path mode
};

/// CSV column names with units, in frozen order.
const std::vector<std::string>& telemetry_columns();
std::string csv_header();
std::string csv_row(const TelemetryFrame& f);
nlohmann::json frame_to_json(const TelemetryFrame& f);

/// One simulated flight: vehicle, wind, guidance and the cascaded controller.
class Simulation {
public:
    Simulation(const ScenarioSpec& spec, vehicle::VehicleConfig vehicle);

    /// Advance one physics step. Returns true when the step began with a
    /// control tick, in which case frame() holds the new telemetry.
    bool step();

    /// Apply a command at the current step boundary. Session commands throw
    /// std::invalid_argument.
    void apply(const Command& c);

    const TelemetryFrame& frame() const { return frame_; }
    double time() const { return static_cast<double>(step_) * dt_; }
    std::uint64_t step_count() const { return step_; }
    double physics_dt() const { return dt_; }
    double control_period() const { return static_cast<double>(steps_per_tick_) * dt_; }
    Mode mode() const { return mode_; }
    std::size_t segment() const { return segment_; }

    vehicle::Vehicle& vehicle() { return vehicle_; }
    const vehicle::Vehicle& vehicle() const { return vehicle_; }
    const env::Wind& wind() const { return wind_; }
    const control::Controller& controller() const { return controller_; }

private:
    void control_tick();
    void set_mode(Mode m);

    ScenarioSpec spec_;
    vehicle::Vehicle vehicle_;
    env::Wind wind_;
    control::Controller controller_;
    double dt_;
    std::uint64_t steps_per_tick_;
    std::uint64_t step_ = 0;
    Mode mode_;
    std::size_t segment_ = 0;
    Vec3 setpoint_override_;
    control::ActuatorCommands manual_;
    control::ActuatorCommands commands_;
    TelemetryFrame frame_;
};

struct RunResult {
    std::vector<TelemetryFrame> frames;
    nlohmann::json summary;
};

/// Run the spec headless, applying its timeline. NonFiniteState propagates
/// with the offending time stamp.
RunResult run(const ScenarioSpec& spec);
/// Write `<dir>/telemetry.csv` and `<dir>/summary.json`.
void write_outputs(const RunResult& result, const std::string& dir);

// Post-processing.

/// Column-major view of a telemetry log.
struct Table {
    std::vector<std::string> columns;
    std::map<std::string, std::vector<double>> data;

    const std::vector<double>& col(const std::string& name) const;
    std::size_t rows() const { return data.empty() ? 0 : data.begin()->second.size(); }
};

Table to_table(const std::vector<TelemetryFrame>& frames);
/// Throws std::runtime_error for a malformed file.
Table read_csv(const std::string& path);

struct Spectrum {
    std::vector<double> freq;   // Hz
    std::vector<double> power;  // one-sided power spectral density, unit^2/Hz
};

/// Welch periodogram: Hann window, 50% overlap, mean removed per segment.
Spectrum welch(const std::vector<double>& x, double fs, std::size_t segment = 512);
/// Integrated power over [lo, hi] Hz.
double band_power(const Spectrum& s, double lo, double hi);
/// Index of the largest bin at or above `min_freq`.
std::size_t peak_bin(const Spectrum& s, double min_freq);

double rms(const std::vector<double>& x);
double stddev(const std::vector<double>& x);

struct SummaryOptions {
    std::size_t welch_segment = 512;
    double high_band_lo = 1.0;    // Hz
    double high_band_hi = 25.0;   // Hz
    double min_peak_freq = 0.05;  // Hz
};

/// Metrics over a log; spectra are split at the first inflation change.
nlohmann::json summarize(const Table& t, const SummaryOptions& opts = {});

}  // namespace blimp::scenario
