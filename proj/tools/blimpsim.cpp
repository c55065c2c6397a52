// blimpsim: headless scenario runner, log summariser and live service.

#include "blimp/bridge.hpp"
#include "blimp/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace blimp;
using nlohmann::json;

namespace {

scenario::ScenarioSpec build_spec(const std::string& file, const std::string& preset) {
    if (file.empty() && preset.empty()) throw std::invalid_argument("a scenario file or --preset is required");
    json doc = preset.empty() ? json::object() : scenario::preset(preset);
    std::string base = ".";
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw SchemaError(file, "cannot open scenario document");
        try {
            doc.merge_patch(json::parse(in));
        } catch (const json::parse_error& e) {
            throw SchemaError(file, e.what());
        }
        base = std::filesystem::path(file).parent_path().string();
        if (base.empty()) base = ".";
    }
    return scenario::parse_scenario(doc, base);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deformable airship flight simulator"};
    app.require_subcommand(1);

    std::string file, preset, out;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    auto* run = app.add_subcommand("run", "Run a scenario headless and write telemetry.csv and summary.json");
    run->add_option("scenario", file, "Scenario JSON document");
    run->add_option("--preset", preset, "Built-in preset used as the base document")
        ->check(CLI::IsMember(scenario::preset_names()));
    run->add_option("--out", out, "Output directory (default: the scenario's output field)");
    run->add_option("--seed", seed, "Override the RNG seed");
    run->add_option("--duration", duration, "Override the duration, s")->check(CLI::PositiveNumber);

    std::string log;
    auto* summarize = app.add_subcommand("summarize", "Print summary metrics of a telemetry log");
    summarize->add_option("log", log, "telemetry CSV")->required();

    std::string preset_name;
    auto* show = app.add_subcommand("preset", "Print a built-in preset scenario document");
    show->add_option("name", preset_name)->required()->check(CLI::IsMember(scenario::preset_names()));

    bridge::ServeOptions serve_opts;
    std::string serve_file, serve_preset;
    auto* serve = app.add_subcommand("serve", "Run the simulation live behind a WebSocket endpoint");
    serve->add_option("scenario", serve_file, "Scenario JSON document (default: loiter with the reference blimp)");
    serve->add_option("--preset", serve_preset)->check(CLI::IsMember(scenario::preset_names()));
    serve->add_option("--port", serve_opts.port, "TCP port, 0 picks a free one")->capture_default_str();
    serve->add_option("--rate", serve_opts.frame_rate, "Frame rate, Hz")->capture_default_str()->check(CLI::PositiveNumber);
    serve->add_option("--timescale", serve_opts.timescale, "Simulated seconds per wall second")
        ->capture_default_str()
        ->check(CLI::Range(0.01, 100.0));
    serve->add_option("--address", serve_opts.address)->capture_default_str();
    serve->add_option("--log", serve_opts.log_path, "Also write telemetry CSV at the control rate");
    serve->add_option("--stop-after", serve_opts.stop_after, "Stop after this many simulated seconds");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            scenario::ScenarioSpec spec = build_spec(file, preset);
            if (seed) spec.seed = spec.wind.seed = *seed;
            if (duration) spec.duration = *duration;
            const std::string dir = out.empty() ? spec.output : out;
            const scenario::RunResult r = scenario::run(spec);
            scenario::write_outputs(r, dir);
            std::cout << r.summary.dump(2) << '\n';
        } else if (*summarize) {
            std::cout << scenario::summarize(scenario::read_csv(log)).dump(2) << '\n';
        } else if (*show) {
            std::cout << scenario::preset(preset_name).dump(2) << '\n';
        } else if (*serve) {
            json doc = json::object();
            if (serve_file.empty() && serve_preset.empty()) doc = scenario::preset("exp2-loiter");
            const scenario::ScenarioSpec spec =
                serve_file.empty() && serve_preset.empty()
                    ? scenario::parse_scenario(doc)
                    : build_spec(serve_file, serve_preset);
            bridge::Server server(spec, serve_opts);
            std::cout << "listening on " << serve_opts.address << ":" << server.port() << std::endl;
            server.run();
        }
    } catch (const NonFiniteState& e) {
        std::cerr << "error: simulation diverged at t = " << e.time() << " s: " << e.what() << '\n';
        return 3;
    } catch (const SchemaError& e) {
        std::cerr << "error: invalid document: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
