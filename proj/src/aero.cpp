#include "blimp/aero.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace blimp::aero {

void AeroPrimitive::validate() const {
    if (!(area > 0.0)) throw std::invalid_argument("aero area must be positive");
    if (c_l0 < 0.0 || c_d0 < 0.0 || c_d1 < 0.0 || k_q < 0.0)
        throw std::invalid_argument("aero coefficients must be non-negative");
    if (!(alpha_stall > 0.0 && alpha_stall < kPi / 2.0))
        throw std::invalid_argument("alpha_stall must lie in (0, pi/2)");
}

RotatedFlow rotate_cylindrical_flow(const Vec3& f) {
    return {Vec3(f.x(), 0.0, std::abs(f.y()) + std::abs(f.z())), std::atan2(f.y(), f.z())};
}

double angle_of_attack(const Vec3& f) {
    if (f.x() == 0.0) {
        if (f.z() == 0.0) return 0.0;
        return std::copysign(kPi / 2.0, f.z());
    }
    return std::atan(f.z() / f.x());
}

double lift_coefficient(double alpha, const AeroPrimitive& p) {
    const double a = std::abs(alpha);
    if (a <= p.alpha_stall) return p.c_l0 * (a / p.alpha_stall);
    return p.c_l0 * (kPi - 2.0 * a) / (kPi - 2.0 * p.alpha_stall);
}

double drag_coefficient(double alpha, const AeroPrimitive& p) {
    const double blend = 2.0 * std::abs(alpha) / kPi;
    return p.c_d0 * (1.0 - blend) + p.c_d1 * blend;
}

AeroResult aero_force(const AeroPrimitive& prim, const Vec3& flow) {
    Vec3 f = flow;
    double phi = 0.0;
    const bool cylindrical = prim.kind == Kind::QuasiCylindrical;
    if (cylindrical) {
        const RotatedFlow r = rotate_cylindrical_flow(flow);
        f = r.flow;
        phi = r.phi;
    }

    AeroResult out;
    const Vec3 planar(f.x(), 0.0, f.z());
    const double speed_sq = planar.squaredNorm();
    if (speed_sq == 0.0) return out;

    out.alpha = angle_of_attack(planar);
    out.dynamic_pressure = prim.k_q * speed_sq;
    out.drag_dir = planar / std::sqrt(speed_sq);
    if (out.alpha != 0.0) out.lift_dir = out.drag_dir.cross(Vec3(0.0, out.alpha > 0.0 ? 1.0 : -1.0, 0.0));

    const double qa = out.dynamic_pressure * prim.area;
    out.lift = qa * lift_coefficient(out.alpha, prim) * out.lift_dir;
    out.drag = qa * drag_coefficient(out.alpha, prim) * out.drag_dir;

    if (cylindrical) {
        // rotated z lies along the lateral flow direction (0, sin phi, cos phi)
        const double s = std::sin(phi);
        const double c = std::cos(phi);
        auto back = [s, c](const Vec3& v) { return Vec3(v.x(), v.z() * s, v.z() * c); };
        out.lift = back(out.lift);
        out.drag = back(out.drag);
        out.lift_dir = back(out.lift_dir);
        out.drag_dir = back(out.drag_dir);
    }
    return out;
}

std::vector<double> distribute_hull_drag(double hull_cd, std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("at least one hull section required");
    for (double w : weights)
        if (w < 0.0) throw std::invalid_argument("hull drag weights must be non-negative");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (total == 0.0) throw AllZeroWeights();

    std::vector<double> out;
    out.reserve(weights.size());
    for (double w : weights) out.push_back(hull_cd * w / total);
    // push the rounding residue onto the largest share
    const double residue = hull_cd - std::accumulate(out.begin(), out.end(), 0.0);
    const auto largest = std::max_element(out.begin(), out.end()) - out.begin();
    out[static_cast<std::size_t>(largest)] += residue;
    return out;
}

}  // namespace blimp::aero
