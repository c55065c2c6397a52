#include "blimp/scenario.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace blimp::scenario {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Numeric fields in column order. Mode and segment are written as integers.
std::vector<double> row_values(const TelemetryFrame& f) {
    std::vector<double> v;
    v.reserve(46);
    v.push_back(f.t);
    for (const Vec3* x : {&f.position, &f.attitude, &f.velocity, &f.air_velocity}) v.insert(v.end(), x->begin(), x->end());
    v.push_back(f.airspeed);
    for (const Vec3* x : {&f.wind, &f.setpoint, &f.air_setpoint}) v.insert(v.end(), x->begin(), x->end());
    v.insert(v.end(), {f.scale, f.pitch_sp, f.yaw_rate_sp, f.thrust_sp, f.gamma});
    v.insert(v.end(), f.actuators.values.begin(), f.actuators.values.end());
    v.insert(v.end(), f.gyro.begin(), f.gyro.end());
    v.push_back(f.inflation);
    v.push_back(static_cast<double>(static_cast<int>(f.mode)));
    v.push_back(static_cast<double>(f.segment));
    v.insert(v.end(), f.reference.begin(), f.reference.end());
    v.push_back(f.cross_track);
    return v;
}

void append_number(std::string& out, double x) {
    char buf[32];
    if (std::isnan(x)) {
        out += "nan";
        return;
    }
    const int n = std::snprintf(buf, sizeof buf, "%.10g", x);
    out.append(buf, static_cast<std::size_t>(n));
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double to_db(double p) { return 10.0 * std::log10(std::max(p, 1e-300)); }

std::vector<double> slice(const std::vector<double>& x, std::size_t a, std::size_t b) {
    return {x.begin() + static_cast<std::ptrdiff_t>(a), x.begin() + static_cast<std::ptrdiff_t>(b)};
}

std::vector<double> finite_only(const std::vector<double>& x) {
    std::vector<double> out;
    std::copy_if(x.begin(), x.end(), std::back_inserter(out), [](double v) { return std::isfinite(v); });
    return out;
}

}  // namespace

const std::vector<std::string>& telemetry_columns() {
    static const std::vector<std::string> cols = {
        "t_s",           "x_m",          "y_m",          "z_m",           "roll_rad",       "pitch_rad",
        "yaw_rad",       "vx_mps",       "vy_mps",       "vz_mps",        "air_vx_mps",     "air_vy_mps",
        "air_vz_mps",    "airspeed_mps", "wind_x_mps",   "wind_y_mps",    "wind_z_mps",     "sp_vx_mps",
        "sp_vy_mps",     "sp_vz_mps",    "sp_air_vx_mps", "sp_air_vy_mps", "sp_air_vz_mps", "sp_scale",
        "sp_pitch_rad",  "sp_yaw_rate_radps", "sp_thrust", "sp_gamma_rad",  "cmd_yaw_thruster", "cmd_top_rudder",
        "cmd_bottom_rudder", "cmd_left_elevator", "cmd_right_elevator", "cmd_thrust_vector", "cmd_left_main",
        "cmd_right_main", "gyro_x_radps", "gyro_y_radps", "gyro_z_radps", "inflation",    "mode",
        "segment",       "ref_x_m",      "ref_y_m",      "ref_z_m",       "cross_track_m"};
    return cols;
}

std::string csv_header() {
    std::string h;
    for (const std::string& c : telemetry_columns()) {
        if (!h.empty()) h += ',';
        h += c;
    }
    return h;
}

std::string csv_row(const TelemetryFrame& f) {
    const std::vector<double> v = row_values(f);
    std::string out;
    out.reserve(v.size() * 14);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        append_number(out, v[i]);
    }
    return out;
}

json frame_to_json(const TelemetryFrame& f) {
    json actuators = json::object();
    for (std::size_t i = 0; i < control::kChannelCount; ++i)
        actuators[std::string(control::channel_name(static_cast<control::Channel>(i)))] = f.actuators.values[i];
    return {{"t", f.t},
            {"position", vec_json(f.position)},
            {"attitude", vec_json(f.attitude)},
            {"velocity", vec_json(f.velocity)},
            {"air_velocity", vec_json(f.air_velocity)},
            {"airspeed", nullable(f.airspeed)},
            {"wind", vec_json(f.wind)},
            {"setpoint",
             {{"v", vec_json(f.setpoint)},
              {"v_air", vec_json(f.air_setpoint)},
              {"b", f.scale},
              {"pitch", f.pitch_sp},
              {"yaw_rate", f.yaw_rate_sp},
              {"thrust", f.thrust_sp},
              {"gamma", f.gamma}}},
            {"actuators", f.actuators.values},
            {"actuator_names", actuators},
            {"gyro", vec_json(f.gyro)},
            {"inflation", f.inflation},
            {"mode", mode_name(f.mode)},
            {"segment", f.segment},
            {"reference", all_finite(f.reference) ? vec_json(f.reference) : json(nullptr)},
            {"cross_track", nullable(f.cross_track)}};
}

const std::vector<double>& Table::col(const std::string& name) const {
    auto it = data.find(name);
    if (it == data.end()) throw std::out_of_range("telemetry has no column '" + name + "'");
    return it->second;
}

Table to_table(const std::vector<TelemetryFrame>& frames) {
    Table t;
    t.columns = telemetry_columns();
    std::vector<std::vector<double>> cols(t.columns.size());
    for (auto& c : cols) c.reserve(frames.size());
    for (const TelemetryFrame& f : frames) {
        const std::vector<double> v = row_values(f);
        for (std::size_t i = 0; i < v.size(); ++i) cols[i].push_back(v[i]);
    }
    for (std::size_t i = 0; i < cols.size(); ++i) t.data[t.columns[i]] = std::move(cols[i]);
    return t;
}

Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    std::stringstream hs(line);
    for (std::string name; std::getline(hs, name, ',');) t.columns.push_back(name);
    std::vector<std::vector<double>> cols(t.columns.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t i = 0;
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p || i >= cols.size())
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
            cols[i++].push_back(v);
            if (*end == '\0') break;
            if (*end != ',') throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
            p = end + 1;
        }
        if (i != cols.size()) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong column count");
    }
    for (std::size_t i = 0; i < cols.size(); ++i) t.data[t.columns[i]] = std::move(cols[i]);
    return t;
}

Spectrum welch(const std::vector<double>& x, double fs, std::size_t seg) {
    Spectrum s;
    if (seg < 2 || x.size() < seg) return s;
    const std::size_t hop = seg / 2;
    std::vector<double> w(seg);
    for (std::size_t i = 0; i < seg; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / seg);
    const double wss = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

    const std::size_t nbins = seg / 2 + 1;
    s.power.assign(nbins, 0.0);
    Eigen::FFT<double> fft;
    std::vector<double> buf(seg);
    std::vector<std::complex<double>> spec;
    std::size_t count = 0;
    for (std::size_t start = 0; start + seg <= x.size(); start += hop, ++count) {
        const double mean = std::accumulate(x.begin() + start, x.begin() + start + seg, 0.0) / seg;
        for (std::size_t i = 0; i < seg; ++i) buf[i] = (x[start + i] - mean) * w[i];
        fft.fwd(spec, buf);
        for (std::size_t k = 0; k < nbins; ++k) s.power[k] += std::norm(spec[k]);
    }
    const double scale = 1.0 / (fs * wss * static_cast<double>(count));
    s.freq.resize(nbins);
    for (std::size_t k = 0; k < nbins; ++k) {
        s.freq[k] = fs * static_cast<double>(k) / seg;
        const bool edge = k == 0 || (seg % 2 == 0 && k == nbins - 1);
        s.power[k] *= scale * (edge ? 1.0 : 2.0);
    }
    return s;
}

double band_power(const Spectrum& s, double lo, double hi) {
    if (s.freq.size() < 2) return 0.0;
    const double df = s.freq[1] - s.freq[0];
    double p = 0.0;
    for (std::size_t k = 0; k < s.freq.size(); ++k)
        if (s.freq[k] >= lo && s.freq[k] <= hi) p += s.power[k] * df;
    return p;
}

std::size_t peak_bin(const Spectrum& s, double min_freq) {
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t k = 0; k < s.freq.size(); ++k)
        if (s.freq[k] >= min_freq && s.power[k] > best_p) {
            best_p = s.power[k];
            best = k;
        }
    return best;
}

double rms(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

double stddev(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(x.size()));
}

json summarize(const Table& t, const SummaryOptions& opts) {
    const std::size_t n = t.rows();
    if (n == 0) throw std::invalid_argument("telemetry log is empty");
    const std::vector<double>& time = t.col("t_s");
    const double period = n > 1 ? time[1] - time[0] : 0.0;
    const double fs = period > 0.0 ? 1.0 / period : 0.0;

    std::vector<double> horiz, alt, speed, yaw_rate, pitch_rate(n), cross;
    const auto& x = t.col("x_m");
    const auto& y = t.col("y_m");
    const auto& z = t.col("z_m");
    const auto& rx = t.col("ref_x_m");
    const auto& ry = t.col("ref_y_m");
    const auto& rz = t.col("ref_z_m");
    const auto& as = t.col("airspeed_mps");
    const auto& avx = t.col("air_vx_mps");
    const auto& avy = t.col("air_vy_mps");
    const auto& avz = t.col("air_vz_mps");
    const auto& gy = t.col("gyro_y_radps");
    const auto& gz = t.col("gyro_z_radps");
    const auto& ct = t.col("cross_track_m");
    std::vector<double> alt_err(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isfinite(rx[i])) {
            horiz.push_back(std::hypot(x[i] - rx[i], y[i] - ry[i]));
            alt_err[i] = z[i] - rz[i];
            alt.push_back(alt_err[i]);
        }
        speed.push_back(std::isfinite(as[i]) ? as[i] : std::sqrt(avx[i] * avx[i] + avy[i] * avy[i] + avz[i] * avz[i]));
        yaw_rate.push_back(std::abs(gz[i]));
        pitch_rate[i] = -gy[i];
        if (std::isfinite(ct[i])) cross.push_back(ct[i]);
    }

    json s;
    s["samples"] = n;
    s["duration_s"] = time.back() - time.front() + period;
    s["control_period_s"] = period;
    s["position_error_rms_m"] = rms(horiz);
    s["position_error_max_m"] = horiz.empty() ? 0.0 : *std::max_element(horiz.begin(), horiz.end());
    s["altitude_error_rms_m"] = rms(alt);
    s["altitude_error_std_m"] = stddev(alt);
    s["mean_airspeed_mps"] = std::accumulate(speed.begin(), speed.end(), 0.0) / static_cast<double>(n);
    s["mean_abs_yaw_rate_radps"] = std::accumulate(yaw_rate.begin(), yaw_rate.end(), 0.0) / static_cast<double>(n);
    s["cross_track_rms_m"] = cross.empty() ? json(nullptr) : json(rms(cross));

    // Split at the first inflation change.
    const auto& infl = t.col("inflation");
    std::size_t split = n;
    for (std::size_t i = 1; i < n; ++i)
        if (infl[i] != infl[0]) {
            split = i;
            break;
        }

    auto section = [&](std::size_t a, std::size_t b, std::size_t seg) {
        json sec;
        sec["from_s"] = time[a];
        sec["to_s"] = time[b - 1] + period;
        sec["altitude_error_std_m"] = stddev(finite_only(slice(alt_err, a, b)));
        const Spectrum pr = welch(slice(pitch_rate, a, b), fs, seg);
        const Spectrum yr = welch(slice(gz, a, b), fs, seg);
        if (!pr.freq.empty()) {
            const std::size_t k = peak_bin(pr, opts.min_peak_freq);
            sec["pitch_rate_peak_hz"] = pr.freq[k];
            sec["pitch_rate_peak_db"] = to_db(pr.power[k]);
            sec["fin_yaw_high_band_db"] = to_db(band_power(yr, opts.high_band_lo, opts.high_band_hi));
        }
        return std::make_pair(sec, std::make_pair(pr, yr));
    };

    if (split == n) {
        const std::size_t seg = std::min(opts.welch_segment, n);
        s["spectra"] = section(0, n, seg).first;
        s["inflation_event_s"] = nullptr;
        return s;
    }

    s["inflation_event_s"] = time[split];
    const std::size_t seg = std::min({opts.welch_segment, split, n - split});
    auto [pre, pre_spec] = section(0, split, seg);
    auto [post, post_spec] = section(split, n, seg);
    s["pre_inflation_change"] = pre;
    s["post_inflation_change"] = post;
    const double pre_std = pre["altitude_error_std_m"].get<double>();
    const double post_std = post["altitude_error_std_m"].get<double>();
    s["altitude_std_ratio"] = pre_std > 0.0 ? json(post_std / pre_std) : json(nullptr);
    if (!pre_spec.first.freq.empty()) {
        const std::size_t k = peak_bin(post_spec.first, opts.min_peak_freq);
        s["pitch_rate_peak_gain_db"] = to_db(post_spec.first.power[k]) - to_db(pre_spec.first.power[k]);
        s["fin_yaw_high_band_gain_db"] = to_db(band_power(post_spec.second, opts.high_band_lo, opts.high_band_hi)) -
                                         to_db(band_power(pre_spec.second, opts.high_band_lo, opts.high_band_hi));
    }
    return s;
}

}  // namespace blimp::scenario
