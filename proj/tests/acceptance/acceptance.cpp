// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "blimp/aero.hpp"
#include "blimp/control.hpp"
#include "blimp/environment.hpp"
#include "blimp/scenario.hpp"
#include "blimp/vehicle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace blimp;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(const std::string& id, const std::string& title, const std::function<Outcome()>& check) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s [%s] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id.c_str(), title.c_str(), o.detail.c_str(), s);
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------------------
// Preset runs, shared between criteria and replayed for the determinism check.

struct PresetRun {
    scenario::Table table;
    json summary;
    std::string csv;
    double wall = 0.0;
};

std::string csv_text(const std::vector<scenario::TelemetryFrame>& frames) {
    std::string out = scenario::csv_header() + '\n';
    for (const auto& f : frames) out += scenario::csv_row(f) + '\n';
    return out;
}

PresetRun run_preset(const std::string& name) {
    const auto t0 = Clock::now();
    const scenario::ScenarioSpec spec = scenario::parse_scenario(scenario::preset(name));
    const scenario::RunResult r = scenario::run(spec);
    PresetRun p{scenario::to_table(r.frames), r.summary, csv_text(r.frames), 0.0};
    p.wall = elapsed(t0);
    return p;
}

std::map<std::string, PresetRun> runs;

const PresetRun& preset_run(const std::string& name) {
    auto it = runs.find(name);
    if (it == runs.end()) it = runs.emplace(name, run_preset(name)).first;
    return it->second;
}

double mean(const std::vector<double>& x, std::size_t from = 0) {
    double s = 0.0;
    for (std::size_t i = from; i < x.size(); ++i) s += x[i];
    return s / static_cast<double>(x.size() - from);
}

std::size_t first_at(const std::vector<double>& t, double time) {
    std::size_t i = 0;
    while (i < t.size() && t[i] < time - 1e-9) ++i;
    return i;
}

// ---------------------------------------------------------------------------
// Lift and drag coefficient curves against a separate evaluation.

double lift_ref(double alpha, double cl0, double stall) {
    const double a = std::fabs(alpha);
    if (a <= stall) return cl0 * a / stall;
    return cl0 * (M_PI - 2.0 * a) / (M_PI - 2.0 * stall);
}

double drag_ref(double alpha, double cd0, double cd1) {
    const double r = 2.0 * std::fabs(alpha) / M_PI;
    return cd0 * (1.0 - r) + cd1 * r;
}

Outcome coefficient_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    bool endpoints = true;
    for (int i = 0; i < 10000; ++i) {
        aero::AeroPrimitive p;
        p.c_l0 = 3.0 * u(rng);
        p.c_d0 = 0.5 * u(rng);
        p.c_d1 = 2.0 * u(rng);
        p.alpha_stall = 1e-3 + (M_PI / 2 - 2e-3) * u(rng);
        const double alpha = (2.0 * u(rng) - 1.0) * M_PI / 2;
        worst = std::max(worst, std::fabs(aero::lift_coefficient(alpha, p) - lift_ref(alpha, p.c_l0, p.alpha_stall)));
        worst = std::max(worst, std::fabs(aero::drag_coefficient(alpha, p) - drag_ref(alpha, p.c_d0, p.c_d1)));
        endpoints = endpoints && aero::lift_coefficient(0.0, p) == 0.0 &&
                    aero::lift_coefficient(p.alpha_stall, p) == p.c_l0 &&
                    aero::lift_coefficient(M_PI / 2, p) == 0.0 && aero::drag_coefficient(0.0, p) == p.c_d0 &&
                    aero::drag_coefficient(M_PI / 2, p) == p.c_d1;
    }
    const double s = elapsed(t0);
    return {worst <= 1e-12 && endpoints && s < 1.0,
            fmt("10^4 tuples, max |err| %.1e (tol 1e-12), endpoints %s, runtime %.3f s (limit 1 s)", worst,
                endpoints ? "exact" : "NOT exact", s)};
}

// ---------------------------------------------------------------------------
// Wind-corrected setpoint against a separate quadratic solve.

double scale_ref(const Vec3& vs, const Vec3& f, double vmin, double vmax) {
    const double m = (vs - f).norm();
    if (m >= vmin && m <= vmax) return 1.0;
    const double limit = m < vmin ? vmin : vmax;
    const double a = vs.squaredNorm(), b = -2.0 * vs.dot(f), c = f.squaredNorm() - limit * limit;
    const double disc = b * b - 4 * a * c;
    if (disc >= 0.0) {
        const double root = (-b + std::sqrt(disc)) / (2 * a);
        if (root >= 0.0) return root;
    }
    return std::max(0.0, vs.dot(f) / a);
}

Outcome setpoint_invariants() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int bad_case = 0, bad_collinear = 0, bad_ref = 0, closest = 0;
    for (int i = 0; i < 100000; ++i) {
        control::ControllerGains g;
        g.v_min = 0.1 + 1.9 * std::fabs(u(rng));
        g.v_max = g.v_min + 0.1 + 2.9 * std::fabs(u(rng));
        const Vec3 vs = 3.0 * Vec3(u(rng), u(rng), u(rng));
        const Vec3 f = 3.0 * Vec3(u(rng), u(rng), 0.3 * u(rng));
        const control::CorrectedSetpoint c = control::correct_setpoint(vs, f, g);
        const double b = c.scale;
        const double m = (b * vs - f).norm();
        const double raw = (vs - f).norm();
        bool ok;
        if (raw >= g.v_min && raw <= g.v_max)
            ok = b == 1.0 && (c.air_velocity - (vs - f)).norm() <= 1e-12;
        else if (raw < g.v_min)
            ok = std::fabs(m - g.v_min) <= 1e-9;
        else if (std::fabs(m - g.v_max) <= 1e-9)
            ok = true;
        else {
            // wind beyond reach: closest approach, never inside the envelope
            ++closest;
            ok = m >= g.v_max - 1e-9;
        }
        ok = ok && (c.air_velocity - (b * vs - f)).norm() <= 1e-9;
        if (!ok) ++bad_case;
        if (b > 0.0) {
            const Vec3 s = c.air_velocity + f;
            if (s.cross(vs).norm() > 1e-9 * std::max(1.0, s.norm() * vs.norm()) || s.dot(vs) < 0.0) ++bad_collinear;
        }
        if (std::fabs(b - scale_ref(vs, f, g.v_min, g.v_max)) > 1e-9 * std::max(1.0, b)) ++bad_ref;
    }
    const double s = elapsed(t0);
    return {bad_case == 0 && bad_collinear == 0 && bad_ref == 0 && s < 5.0,
            fmt("10^5 draws: %d case violations, %d collinearity violations, %d mismatches vs reference b "
                "(tol 1e-9), %d closest-approach cases, runtime %.2f s (limit 5 s)",
                bad_case, bad_collinear, bad_ref, closest, s)};
}

// ---------------------------------------------------------------------------
// Dryden statistics against the closed-form low-altitude intensities.

Outcome dryden_statistics() {
    const auto t0 = Clock::now();
    const double ft = 3.28083989501312, knot = 0.514444444444444;
    const double h = 50.0 * ft;   // the low-altitude forms are stated in feet
    const double sigma_w = 0.1 * 3.0 * 3.0 * knot;
    const double sigma_u = sigma_w / std::pow(0.177 + 0.000823 * h, 0.4);
    const double length_u = h / std::pow(0.177 + 0.000823 * h, 1.2) / ft;
    const double V = 2.0;
    const double tau = length_u / V;

    env::WindConfig c;
    c.magnitude = 3.0;
    c.knots_per_magnitude = 3.0;
    c.seed = 7;
    env::DrydenTurbulence d(c.seed);
    // 1 s samples: 10^6 of them span ~10^4 longitudinal correlation times
    const double dt = 1.0;
    const std::size_t n = 1000000;
    std::vector<double> u(n);
    Eigen::Array3d sum = Eigen::Array3d::Zero(), sq = Eigen::Array3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 g = d.step(dt, V, 50.0, c);
        u[i] = g.x();
        sum += g.array();
        sq += g.array().square();
    }
    const Eigen::Array3d m = sum / static_cast<double>(n);
    const Eigen::Array3d sd = (sq / static_cast<double>(n) - m.square()).sqrt();
    const Eigen::Array3d target(sigma_u, sigma_u, sigma_w);
    const Eigen::Array3d rel = (sd - target).abs() / target;
    const Eigen::Array3d mean_rel = m.abs() / target;

    // lag at which the normalised autocorrelation falls to 1/e
    const double var = sd.x() * sd.x();
    double corr_time = NAN, prev = 1.0;
    for (std::size_t k = 1; k < 20 * static_cast<std::size_t>(tau / dt); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) acc += (u[i] - m.x()) * (u[i + k] - m.x());
        const double rho = acc / (static_cast<double>(n - k) * var);
        if (rho < std::exp(-1.0)) {
            corr_time = dt * (static_cast<double>(k) - 1.0 + (prev - std::exp(-1.0)) / (prev - rho));
            break;
        }
        prev = rho;
    }
    const double tau_rel = std::fabs(corr_time - tau) / tau;
    const double s = elapsed(t0);
    const bool ok = (rel < 0.10).all() && (mean_rel < 0.05).all() && tau_rel < 0.15 && s < 10.0;
    return {ok, fmt("sigma u/v/w %.3f/%.3f/%.3f vs %.3f/%.3f/%.3f m/s (max dev %.1f%%, tol 10%%), |mean|/sigma max "
                    "%.3f (tol 0.05), corr time %.1f s vs L_u/V %.1f s (dev %.1f%%, tol 15%%), runtime %.2f s (limit 10 s)",
                    sd.x(), sd.y(), sd.z(), sigma_u, sigma_u, sigma_w, 100 * rel.maxCoeff(), mean_rel.maxCoeff(),
                    corr_time, tau, 100 * tau_rel, s)};
}

// ---------------------------------------------------------------------------
// Momentum and energy of the free, unpowered airframe.

Outcome conservation() {
    vehicle::Vehicle v(vehicle::load_vehicle_file(scenario::default_vehicle_path()), {0, 0, 50});
    World& w = v.world();
    w.gravity_enabled = false;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (std::size_t i = 0; i < w.body_count(); ++i) {
        BodyState& s = w.state(BodyId{i});
        s.velocity = Vec3(u(rng), u(rng), u(rng));
        s.angular_velocity = Vec3(u(rng), u(rng), u(rng));
    }
    const Vec3 p0 = w.total_momentum().linear;
    double e_prev = w.mechanical_energy();
    const double e0 = e_prev;
    double worst_rise = 0.0;
    for (int k = 0; k < 10000; ++k) {
        w.step(0.001);
        const double e = w.mechanical_energy();
        worst_rise = std::max(worst_rise, e - e_prev);
        e_prev = e;
    }
    const double drift = (w.total_momentum().linear - p0).norm() / p0.norm();
    const bool ok = drift < 1e-6 && worst_rise <= 1e-9 * e0;
    return {ok, fmt("10^4 steps: linear momentum drift %.2e (tol 1e-6), largest step energy rise %.2e J "
                    "(tol 1e-9 x E0 = %.2e J), energy %.4f -> %.4f J",
                    drift, worst_rise, 1e-9 * e0, e0, e_prev)};
}

// ---------------------------------------------------------------------------
// Experiments.

Outcome experiment2() {
    const PresetRun& r = preset_run("exp2-loiter");
    const auto& t = r.table.col("t_s");
    const std::size_t from = first_at(t, t.back() - 120.0 + 0.02);
    const double airspeed = mean(r.table.col("airspeed_mps"), from);
    std::vector<double> yaw;
    for (double g : r.table.col("gyro_z_radps")) yaw.push_back(std::fabs(g));
    const double yaw_rate = mean(yaw, from);
    const double limit = 10.0 * M_PI / 180.0;
    const bool ok = std::fabs(airspeed - 1.0) <= 0.15 && std::fabs(yaw_rate - limit) <= 0.15 * limit && r.wall < 120.0;
    return {ok, fmt("final 120 s: mean airspeed %.3f m/s (1 +-15%%), mean |yaw rate| %.4f rad/s (%.4f +-15%%), "
                    "runtime %.1f s (limit 120 s)",
                    airspeed, yaw_rate, limit, r.wall)};
}

Outcome experiment3() {
    const PresetRun& r = preset_run("exp3-path");
    const scenario::ScenarioSpec spec = scenario::parse_scenario(scenario::preset("exp3-path"));
    const auto& wps = spec.path.waypoints;
    const std::size_t n_wp = wps.size();
    const auto& seg = r.table.col("segment");
    const auto& x = r.table.col("x_m");
    const auto& y = r.table.col("y_m");
    const auto& z = r.table.col("z_m");
    const auto& ct = r.table.col("cross_track_m");

    // A waypoint is captured when the segment advances past it after the vehicle came
    // within the acceptance radius. Advancing by crossing the end plane alone does not count.
    const double kCapture = spec.path.acceptance_radius;
    std::vector<double> approach;
    std::vector<std::size_t> advance_at;
    double closest = INFINITY;
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (i > 0 && seg[i] != seg[i - 1]) {
            // the advancing frame is the one that met the radius, so it counts
            const Vec3& reached = wps[(static_cast<std::size_t>(seg[i - 1]) + 1) % n_wp];
            approach.push_back(std::min(closest, (Vec3(x[i], y[i], z[i]) - reached).norm()));
            advance_at.push_back(i);
            closest = INFINITY;
        }
        const Vec3& target = wps[(static_cast<std::size_t>(seg[i]) + 1) % n_wp];
        closest = std::min(closest, (Vec3(x[i], y[i], z[i]) - target).norm());
    }
    const std::size_t laps = approach.size() / n_wp;
    if (laps < 4)
        return {false, fmt("only %zu waypoint advances (%zu full laps), need the first lap plus 3", approach.size(), laps)};
    double worst = 0.0;
    for (std::size_t k = n_wp; k < 4 * n_wp; ++k) worst = std::max(worst, approach[k]);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = advance_at[n_wp - 1]; i < ct.size(); ++i) {
        acc += ct[i] * ct[i];
        ++cnt;
    }
    const double rms = std::sqrt(acc / static_cast<double>(cnt));
    const bool ok = rms < 5.0 && worst <= kCapture;
    return {ok, fmt("%zu laps; laps 2-4 worst waypoint approach %.2f m (capture <= %.1f m); cross-track RMS after "
                    "lap 1 %.2f m (tol 5 m)",
                    laps, worst, kCapture, rms)};
}

struct Excursions {
    int count = 0;
    int judged = 0;
    int returned = 0;
    double peak = 0.0;
};

// An excursion starts when |z - z_ref| exceeds 2 m and ends once it is back within 1 m.
// Excursions starting in the last 60 s cannot be judged.
Excursions altitude_excursions(const scenario::Table& t) {
    const auto& time = t.col("t_s");
    const auto& z = t.col("z_m");
    const auto& zr = t.col("ref_z_m");
    Excursions e;
    const double end = time.back();
    std::size_t i = 0;
    while (i < z.size()) {
        if (std::fabs(z[i] - zr[i]) > 2.0) {
            ++e.count;
            const bool judged = time[i] <= end - 60.0;
            std::size_t j = i;
            while (j < z.size() && std::fabs(z[j] - zr[j]) > 1.0) {
                e.peak = std::max(e.peak, std::fabs(z[j] - zr[j]));
                ++j;
            }
            if (judged) {
                ++e.judged;
                if (j < z.size()) ++e.returned;
            }
            i = j;
        }
        ++i;
    }
    return e;
}

Outcome experiment4() {
    const PresetRun& loiter = preset_run("exp4-wind-loiter");
    const PresetRun& path = preset_run("exp4-wind-path");
    const scenario::ScenarioSpec spec = scenario::parse_scenario(scenario::preset("exp4-wind-loiter"));

    const auto& t = loiter.table.col("t_s");
    const auto& x = loiter.table.col("x_m");
    const auto& y = loiter.table.col("y_m");
    double far = 0.0;
    for (std::size_t i = first_at(t, t.back() / 3.0); i < t.size(); ++i)
        far = std::max(far, std::hypot(x[i] - spec.loiter.hold.x(), y[i] - spec.loiter.hold.y()));

    const Excursions el = altitude_excursions(loiter.table);
    const Excursions ep = altitude_excursions(path.table);

    bool same_gusts = loiter.table.rows() == path.table.rows();
    for (const char* c : {"wind_x_mps", "wind_y_mps", "wind_z_mps"})
        same_gusts = same_gusts && loiter.table.col(c) == path.table.col(c);

    const bool position_ok = far < 25.0;
    const bool excursions_ok = std::max(el.peak, ep.peak) >= 3.0 && el.returned == el.judged &&
                               ep.returned == ep.judged;
    return {position_ok && excursions_ok && same_gusts,
            fmt("loiter max horizontal distance from P0 over final 2/3: %.1f m (tol < 25 m); altitude excursions "
                ">2 m: loiter %d (peak %.1f m, %d/%d judged returned within 1 m), path %d (peak %.1f m, %d/%d); "
                "gust series identical across modes: %s",
                far, el.count, el.peak, el.returned, el.judged, ep.count, ep.peak, ep.returned, ep.judged,
                same_gusts ? "yes" : "no")};
}

Outcome experiment5() {
    const PresetRun& r = preset_run("exp5-deflate-loiter");
    const json& s = r.summary;
    const double ratio = s.at("altitude_std_ratio").get<double>();
    const double pitch_db = s.at("pitch_rate_peak_gain_db").get<double>();
    const double yaw_db = s.at("fin_yaw_high_band_gain_db").get<double>();
    const double peak_hz = s.at("post_inflation_change").at("pitch_rate_peak_hz").get<double>();
    const PresetRun& p = preset_run("exp5-deflate-path");
    const bool ok = ratio >= 1.5 && pitch_db >= 6.0 && yaw_db >= 6.0;
    return {ok, fmt("loiter: altitude sigma post/pre %.2f (tol >= 1.5), pitch-rate peak at %.3f Hz %+.1f dB over "
                    "pre-deflation (tol >= 6 dB), fin yaw 1-25 Hz band %+.1f dB (tol >= 6 dB); path altitude sigma "
                    "ratio %.2f (informational)",
                    ratio, peak_hz, pitch_db, yaw_db, p.summary.at("altitude_std_ratio").get<double>())};
}

Outcome determinism() {
    int identical = 0, total = 0;
    std::string differing;
    for (const std::string& name : scenario::preset_names()) {
        const std::string first = preset_run(name).csv;
        const std::string second = run_preset(name).csv;
        ++total;
        if (first == second)
            ++identical;
        else
            differing += " " + name;
    }
    return {identical == total, fmt("%d/%d presets byte-identical on rerun%s%s", identical, total,
                                    differing.empty() ? "" : "; differing:", differing.c_str())};
}

}  // namespace

int main() {
    report("coefficients", "Lift/drag coefficient curves vs independent evaluation", coefficient_oracle);
    report("setpoint", "Wind-corrected setpoint invariants", setpoint_invariants);
    report("dryden", "Dryden turbulence statistics", dryden_statistics);
    report("conservation", "Momentum and energy of the unpowered airframe", conservation);
    report("exp2", "Experiment 2, loiter without wind", experiment2);
    report("exp3", "Experiment 3, square path at 2 m/s", experiment3);
    report("exp4", "Experiment 4, loiter and path in gusty wind", experiment4);
    report("exp5", "Experiment 5, deflation at half time", experiment5);
    report("determinism", "Repeated preset runs", determinism);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
