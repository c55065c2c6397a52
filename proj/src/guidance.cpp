#include "blimp/guidance.hpp"

#include <string>

namespace blimp::guidance {

namespace {

struct Segment {
    Vec3 start;
    Vec3 end;
};

Segment segment_of(const PathSpec& spec, std::size_t i) {
    const std::size_t n = spec.waypoints.size();
    if (n < 2) throw std::invalid_argument("path needs at least two waypoints");
    if (i >= n) throw std::out_of_range("segment index " + std::to_string(i) + " out of range");
    return {spec.waypoints[i], spec.waypoints[(i + 1) % n]};
}

}  // namespace

void PathSpec::validate() const {
    if (waypoints.size() < 2) throw std::invalid_argument("path needs at least two waypoints");
    if (!(speed > 0.0)) throw std::invalid_argument("path speed must be positive");
    for (std::size_t i = 0; i < waypoints.size(); ++i)
        if ((waypoints[(i + 1) % waypoints.size()] - waypoints[i]).norm() == 0.0)
            throw DegenerateSegment("waypoints " + std::to_string(i) + " and " +
                                    std::to_string((i + 1) % waypoints.size()) + " coincide");
}

Vec3 loiter_setpoint(const Vec3& position, const LoiterSpec& spec) { return spec.gain * (spec.hold - position); }

Vec3 path_setpoint(const Vec3& position, const PathSpec& spec, std::size_t segment) {
    const Segment s = segment_of(spec, segment);
    const Vec3 pa = position - s.start;
    const Vec3 pb = s.end - s.start;
    const double len = pb.norm();
    if (len == 0.0) throw DegenerateSegment("segment " + std::to_string(segment) + " has zero length");
    const Vec3 pb_hat = pb / len;
    const Vec3& scale_vec = spec.projected_correction ? pb_hat : pb;
    return spec.speed * pb_hat + spec.gain * (scale_vec * pa.dot(pb_hat) - pa);
}

std::size_t advance_waypoint(const Vec3& position, const PathSpec& spec, std::size_t segment) {
    const Segment s = segment_of(spec, segment);
    const Vec3 pb = s.end - s.start;
    const double len = pb.norm();
    if (len == 0.0) throw DegenerateSegment("segment " + std::to_string(segment) + " has zero length");
    const double along = (position - s.start).dot(pb / len);
    if (along >= len || (position - s.end).norm() < spec.acceptance_radius)
        return (segment + 1) % spec.waypoints.size();
    return segment;
}

double cross_track_error(const Vec3& position, const PathSpec& spec, std::size_t segment) {
    const Segment s = segment_of(spec, segment);
    const Vec3 pb_hat = (s.end - s.start).normalized();
    const Vec3 pa = position - s.start;
    return (pa - pb_hat * pa.dot(pb_hat)).norm();
}

}  // namespace blimp::guidance
