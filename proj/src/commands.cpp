#include "blimp/scenario.hpp"

#include "json_fields.hpp"

#include <algorithm>
#include <cmath>

namespace blimp::scenario {

using nlohmann::json;
using namespace detail;

namespace {

constexpr std::array<std::string_view, 4> kModeNames = {"manual", "loiter", "path", "setpoint"};

std::optional<double> optional_number(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    return number(*it, at(path, key));
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& path) {
    for (auto& [key, value] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw SchemaError(at(path, key), "unknown field");
}

}  // namespace

std::string_view mode_name(Mode m) { return kModeNames.at(static_cast<std::size_t>(m)); }

Mode mode_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kModeNames.size(); ++i)
        if (kModeNames[i] == name) return static_cast<Mode>(i);
    throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

bool is_session_command(const Command& c) {
    return std::holds_alternative<PauseCmd>(c) || std::holds_alternative<ResumeCmd>(c) ||
           std::holds_alternative<TimescaleCmd>(c);
}

ParsedCommand parse_command(const json& doc, const std::string& path) {
    if (!doc.is_object()) throw SchemaError(path, "expected an object");
    const std::string type = text(doc, "type", path);
    ParsedCommand out{PauseCmd{}, false, {}};

    if (type == "actuators") {
        reject_unknown(doc, {"type", "values", "t"}, path);
        const json& values = array(doc, "values", path);
        if (values.size() != control::kChannelCount)
            throw SchemaError(at(path, "values"), "expected 8 channel values");
        ActuatorCmd cmd;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double v = number(values[i], at(at(path, "values"), i));
            if (!std::isfinite(v)) throw SchemaError(at(at(path, "values"), i), "must be finite");
            cmd.values.values[i] = v;
        }
        if (cmd.values.saturate()) {
            out.clamped = true;
            out.detail = "actuator values clamped to [-1, 1]";
        }
        out.command = cmd;
    } else if (type == "mode") {
        reject_unknown(doc, {"type", "mode", "t"}, path);
        try {
            out.command = ModeCmd{mode_from_name(text(doc, "mode", path))};
        } catch (const std::invalid_argument& e) {
            throw SchemaError(at(path, "mode"), e.what());
        }
    } else if (type == "setpoint") {
        reject_unknown(doc, {"type", "v", "t"}, path);
        const Vec3 v = vec3(require(doc, "v", path), at(path, "v"));
        if (!all_finite(v)) throw SchemaError(at(path, "v"), "must be finite");
        out.command = SetpointCmd{v};
    } else if (type == "inflation") {
        reject_unknown(doc, {"type", "level", "stiffness_scale", "buoyancy_scale", "free_play_scale", "offset", "t"},
                       path);
        InflationCmd cmd;
        cmd.setting.level = number(doc, "level", path);
        cmd.setting.stiffness_scale = optional_number(doc, "stiffness_scale", path);
        cmd.setting.buoyancy_scale = optional_number(doc, "buoyancy_scale", path);
        cmd.setting.free_play_scale = optional_number(doc, "free_play_scale", path);
        if (auto off = optional_number(doc, "offset", path); off && *off != 0.0)
            throw SchemaError(at(path, "offset"), "only a zero offset is supported");
        try {
            vehicle::inflation_scales(cmd.setting, {});
        } catch (const OutOfRange& e) {
            throw SchemaError(path, e.what());
        }
        out.command = cmd;
    } else if (type == "wind") {
        reject_unknown(doc, {"type", "from_deg", "speed", "magnitude", "t"}, path);
        WindCmd cmd{optional_number(doc, "from_deg", path), optional_number(doc, "speed", path),
                    optional_number(doc, "magnitude", path)};
        if (cmd.speed && !(*cmd.speed >= 0.0)) throw SchemaError(at(path, "speed"), "must be non-negative");
        if (cmd.magnitude && !(*cmd.magnitude >= 0.0 && *cmd.magnitude <= 7.0))
            throw SchemaError(at(path, "magnitude"), "must lie in [0, 7]");
        if (cmd.from_deg && !std::isfinite(*cmd.from_deg)) throw SchemaError(at(path, "from_deg"), "must be finite");
        out.command = cmd;
    } else if (type == "gains") {
        reject_unknown(doc, {"type", "gains", "t"}, path);
        const json& g = require(doc, "gains", path);
        vehicle::parse_gains(g, at(path, "gains"));
        out.command = GainsCmd{g};
    } else if (type == "pause") {
        out.command = PauseCmd{};
    } else if (type == "resume") {
        out.command = ResumeCmd{};
    } else if (type == "timescale") {
        const double f = number(doc, "factor", path);
        if (!(f > 0.0) || !std::isfinite(f)) throw SchemaError(at(path, "factor"), "must be positive");
        const double clamped = std::clamp(f, 0.01, 100.0);
        if (clamped != f) {
            out.clamped = true;
            out.detail = "time scale clamped to [0.01, 100]";
        }
        out.command = TimescaleCmd{clamped};
    } else {
        throw SchemaError(at(path, "type"), "unknown command type '" + type + "'");
    }
    return out;
}

}  // namespace blimp::scenario
