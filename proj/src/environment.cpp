#include "blimp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blimp::env {

void WindConfig::validate() const {
    if (!(speed >= 0.0)) throw std::invalid_argument("wind speed must be non-negative");
    if (!(magnitude >= 0.0 && magnitude <= 7.0)) throw std::invalid_argument("turbulence magnitude must lie in [0, 7]");
    if (!(reference_altitude > 0.0)) throw std::invalid_argument("reference altitude must be positive");
    if (!(reference_airspeed > 0.0)) throw std::invalid_argument("reference airspeed must be positive");
    if (!(knots_per_magnitude >= 0.0)) throw std::invalid_argument("knots_per_magnitude must be non-negative");
}

DrydenScales dryden_scales(double altitude, double magnitude, double knots_per_magnitude) {
    // low-altitude forms are stated in feet; 10 ft floor as in the standard's tables
    const double h_ft = std::max(altitude * kFeetPerMetre, 10.0);
    const double base = 0.177 + 0.000823 * h_ft;
    const double w20 = magnitude * knots_per_magnitude * kKnot;

    DrydenScales s;
    s.sigma_w = 0.1 * w20;
    s.sigma_u = s.sigma_w / std::pow(base, 0.4);
    s.sigma_v = s.sigma_u;
    s.length_w = h_ft / kFeetPerMetre;
    s.length_u = h_ft / std::pow(base, 1.2) / kFeetPerMetre;
    s.length_v = s.length_u;
    return s;
}

void TustinFilter::set(double dt, double b0, double b1, double b2, double a0, double a1, double a2) {
    const double k = 2.0 / dt;
    const double k2 = k * k;
    const double d0 = a0 + a1 * k + a2 * k2;
    n0_ = (b0 + b1 * k + b2 * k2) / d0;
    n1_ = (2.0 * b0 - 2.0 * b2 * k2) / d0;
    n2_ = (b0 - b1 * k + b2 * k2) / d0;
    d1_ = (2.0 * a0 - 2.0 * a2 * k2) / d0;
    d2_ = (a0 - a1 * k + a2 * k2) / d0;
    if (a2 == 0.0 && b2 == 0.0) {
        // first order: drop the common (1 + z^-1) factor
        n0_ = (b0 + b1 * k) / d0;
        n1_ = (b0 - b1 * k) / d0;
        n2_ = 0.0;
        d1_ = (a0 - a1 * k) / d0;
        d2_ = 0.0;
    }
}

double TustinFilter::update(double x) {
    const double y = n0_ * x + z1_;
    z1_ = n1_ * x - d1_ * y + z2_;
    z2_ = n2_ * x - d2_ * y;
    return y;
}

void DrydenTurbulence::configure(double dt, double airspeed, double altitude, const WindConfig& c) {
    if (dt == dt_ && airspeed == airspeed_ && altitude == altitude_ && c.magnitude == magnitude_ &&
        c.knots_per_magnitude == knots_)
        return;
    dt_ = dt;
    airspeed_ = airspeed;
    altitude_ = altitude;
    magnitude_ = c.magnitude;
    knots_ = c.knots_per_magnitude;

    const DrydenScales s = dryden_scales(altitude, c.magnitude, c.knots_per_magnitude);
    const double tu = s.length_u / airspeed;
    const double tv = s.length_v / airspeed;
    const double tw = s.length_w / airspeed;
    const double r3 = std::sqrt(3.0);

    // gains normalise each filter to unit-intensity white noise input
    const double ku = s.sigma_u * std::sqrt(2.0 * tu);
    const double kv = s.sigma_v * std::sqrt(tv);
    const double kw = s.sigma_w * std::sqrt(tw);
    u_.set(dt, ku, 0.0, 0.0, 1.0, tu, 0.0);
    v_.set(dt, kv, kv * r3 * tv, 0.0, 1.0, 2.0 * tv, tv * tv);
    w_.set(dt, kw, kw * r3 * tw, 0.0, 1.0, 2.0 * tw, tw * tw);
}

Vec3 DrydenTurbulence::step(double dt, double airspeed, double altitude, const WindConfig& config) {
    if (!(dt > 0.0)) throw std::invalid_argument("turbulence step must be positive");
    configure(dt, std::max(airspeed, 1.0), altitude, config);
    const double scale = 1.0 / std::sqrt(dt);
    const double nu = normal_(rng_) * scale;
    const double nv = normal_(rng_) * scale;
    const double nw = normal_(rng_) * scale;
    if (config.magnitude == 0.0) {
        last_.setZero();
        return last_;
    }
    last_ = Vec3(u_.update(nu), v_.update(nv), w_.update(nw));
    return last_;
}

Vec3 mean_wind(const WindConfig& c) {
    const double th = c.from_deg * kPi / 180.0;
    return Vec3(-c.speed * std::sin(th), -c.speed * std::cos(th), 0.0);
}

Wind::Wind(WindConfig config) : config_(config), turbulence_(config.seed) {
    config_.validate();
    current_ = mean_wind(config_);
}

Vec3 Wind::gust_world() const {
    const Vec3& g = turbulence_.last();
    // u along the direction the mean wind blows toward, v to its left
    const double th = config_.from_deg * kPi / 180.0;
    const Vec3 along(-std::sin(th), -std::cos(th), 0.0);
    const Vec3 left(-along.y(), along.x(), 0.0);
    return g.x() * along + g.y() * left + Vec3(0.0, 0.0, g.z());
}

const Vec3& Wind::advance(double dt) {
    turbulence_.step(dt, config_.reference_airspeed, config_.reference_altitude, config_);
    time_ += dt;
    current_ = mean_wind(config_) + gust_world();
    return current_;
}

void Wind::reconfigure(const WindConfig& config) {
    config.validate();
    config_ = config;
    current_ = mean_wind(config_) + gust_world();
}

Wrench buoyancy_wrench(const BuoyancySection& section, BodyId body, const BodyState& state, double rho) {
    const Vec3 force(0.0, 0.0, section.coefficient * section.volume * rho * kGravity);
    return Wrench::at_point(body, state, force, state.to_world(section.center));
}

}  // namespace blimp::env
