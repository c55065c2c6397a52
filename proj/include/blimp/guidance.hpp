#pragma once

#include "blimp/types.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace blimp::guidance {

struct LoiterSpec {
    Vec3 hold = Vec3::Zero();   // m, world
    double gain = 0.2;          // 1/s
};

struct PathSpec {
    std::vector<Vec3> waypoints;      // closed circuit, last connects back to first
    double speed = 2.0;               // m/s
    double gain = 0.5;                // 1/s, cross-track correction
    double acceptance_radius = 5.0;   // m
    /// Use the unit path vector in the correction term (a true projection onto the
    /// segment line) instead of the unnormalised one.
    bool projected_correction = false;

    void validate() const;
    std::size_t segment_count() const { return waypoints.size(); }
};

class DegenerateSegment : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Proportional pull toward the hold position.
Vec3 loiter_setpoint(const Vec3& position, const LoiterSpec& spec);

/// Along-track speed plus cross-track correction for the active segment.
Vec3 path_setpoint(const Vec3& position, const PathSpec& spec, std::size_t segment);

/// Index of the segment to follow next; wraps after the last segment.
std::size_t advance_waypoint(const Vec3& position, const PathSpec& spec, std::size_t segment);

/// Perpendicular distance from the (infinite) segment line.
double cross_track_error(const Vec3& position, const PathSpec& spec, std::size_t segment);

}  // namespace blimp::guidance
