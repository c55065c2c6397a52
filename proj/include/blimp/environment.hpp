#pragma once

#include "blimp/multibody.hpp"
#include "blimp/types.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace blimp::env {

inline constexpr double kFeetPerMetre = 3.28083989501312;
inline constexpr double kKnot = 0.514444444444444;   // m/s

struct WindConfig {
    double speed = 0.0;              // m/s, mean wind
    double from_deg = 0.0;           // compass direction the wind blows from
    double magnitude = 0.0;          // turbulence magnitude, 0..7
    double reference_altitude = 50.0;  // m, altitude used by the turbulence scales
    double reference_airspeed = 2.0;   // m/s, airspeed used by the turbulence filters
    double knots_per_magnitude = 3.0;  // W20 = magnitude * this, in knots
    std::uint64_t seed = 1;

    void validate() const;
};

/// MIL-F-8785C low-altitude intensities and scale lengths (SI units).
struct DrydenScales {
    double sigma_u = 0.0, sigma_v = 0.0, sigma_w = 0.0;  // m/s
    double length_u = 0.0, length_v = 0.0, length_w = 0.0;  // m
};

DrydenScales dryden_scales(double altitude, double magnitude, double knots_per_magnitude);

/// Tustin-discretised rational filter up to second order, direct form II transposed.
/// Continuous form: (b0 + b1 s + b2 s^2) / (a0 + a1 s + a2 s^2).
class TustinFilter {
public:
    void set(double dt, double b0, double b1, double b2, double a0, double a1, double a2);
    double update(double input);
    void reset() { z1_ = z2_ = 0.0; }

private:
    double n0_ = 0, n1_ = 0, n2_ = 0, d1_ = 0, d2_ = 0;
    double z1_ = 0, z2_ = 0;
};

/// Dryden shaping filters driven by seeded Gaussian white noise.
/// Output is the gust triple (u along the mean-wind direction, v to its left, w up).
class DrydenTurbulence {
public:
    explicit DrydenTurbulence(std::uint64_t seed) : rng_(seed) {}

    /// Advance the filters by dt and return the new (u, v, w) gust, m/s.
    Vec3 step(double dt, double airspeed, double altitude, const WindConfig& config);
    const Vec3& last() const { return last_; }

private:
    void configure(double dt, double airspeed, double altitude, const WindConfig& config);

    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    TustinFilter u_, v_, w_;
    Vec3 last_ = Vec3::Zero();
    double dt_ = -1, airspeed_ = -1, altitude_ = -1, magnitude_ = -1, knots_ = -1;
};

/// Mean wind velocity in the ENU world frame for a compass from-direction.
Vec3 mean_wind(const WindConfig& config);

/// Single, spatially constant wind vector: mean wind plus the current gust.
class Wind {
public:
    explicit Wind(WindConfig config = {});

    /// Advance the turbulence by one step; returns the new wind vector.
    const Vec3& advance(double dt);
    const Vec3& current() const { return current_; }
    /// Gust component only, world frame.
    Vec3 gust_world() const;
    double time() const { return time_; }

    /// Takes effect for subsequent steps; the noise stream is not reseeded.
    void reconfigure(const WindConfig& config);
    const WindConfig& config() const { return config_; }

private:
    WindConfig config_;
    DrydenTurbulence turbulence_;
    Vec3 current_ = Vec3::Zero();
    double time_ = 0.0;
};

struct BuoyancySection {
    std::string body;
    double volume = 0.0;          // m^3
    double coefficient = 1.0;     // dimensionless, run-time mutable
    Vec3 center = Vec3::Zero();   // centre of buoyancy, body frame
};

/// Upward force c_b * V * rho * g applied at the centre of buoyancy.
Wrench buoyancy_wrench(const BuoyancySection& section, BodyId body, const BodyState& state,
                       double air_density = kSeaLevelDensity);

}  // namespace blimp::env
