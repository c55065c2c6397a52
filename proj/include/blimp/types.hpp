#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace blimp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.81;            // m/s^2
inline constexpr double kSeaLevelDensity = 1.225;   // kg/m^3

/// Thrown when a state component becomes NaN or infinite during integration.
class NonFiniteState : public std::runtime_error {
public:
    NonFiniteState(double sim_time, const std::string& what)
        : std::runtime_error(what), time_(sim_time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Malformed or semantically invalid configuration document.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class DanglingReference : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonPositiveMass : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

inline double clamp_sym(double x, double limit) {
    return x > limit ? limit : (x < -limit ? -limit : x);
}

/// Wrap an angle into (-pi, pi].
inline double wrap_pi(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}

}  // namespace blimp
