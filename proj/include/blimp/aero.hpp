#pragma once

#include "blimp/types.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace blimp::aero {

enum class Kind { QuasiPlanar, QuasiCylindrical };

/// Per-component aerodynamic descriptor. Four shape coefficients plus a
/// reference area and the dynamic-pressure constant.
struct AeroPrimitive {
    Kind kind = Kind::QuasiPlanar;
    double area = 1.0;          // m^2
    double c_l0 = 0.0;          // peak lift coefficient
    double c_d0 = 0.0;          // drag coefficient in axial flow
    double c_d1 = 0.0;          // drag coefficient in cross flow
    double alpha_stall = 0.3;   // rad, in (0, pi/2)
    double k_q = 0.5 * kSeaLevelDensity;  // kg/m^3

    /// Throws std::invalid_argument when coefficients are out of domain.
    void validate() const;
};

/// Flow in the rotated (lateral-plane) frame of a quasi-cylindrical primitive,
/// plus the angle that maps rotated z back onto the body y-z plane.
struct RotatedFlow {
    Vec3 flow = Vec3::Zero();
    double phi = 0.0;   // rad, atan2(f_y, f_z)
};

struct AeroResult {
    double alpha = 0.0;             // rad
    double dynamic_pressure = 0.0;  // Pa
    Vec3 lift = Vec3::Zero();       // N, primitive frame
    Vec3 drag = Vec3::Zero();       // N, primitive frame
    Vec3 drag_dir = Vec3::Zero();
    Vec3 lift_dir = Vec3::Zero();

    Vec3 total() const { return lift + drag; }
};

class AllZeroWeights : public std::invalid_argument {
public:
    AllZeroWeights() : std::invalid_argument("hull drag weights are all zero") {}
};

/// [f_x, 0, |f_y| + |f_z|]; the L1 lateral magnitude is intentional.
RotatedFlow rotate_cylindrical_flow(const Vec3& flow);

/// arctan(f_z / f_x) in [-pi/2, pi/2]; +-pi/2 for pure normal flow, 0 for no flow.
double angle_of_attack(const Vec3& flow);

double lift_coefficient(double alpha, const AeroPrimitive& prim);
double drag_coefficient(double alpha, const AeroPrimitive& prim);

/// Lift and drag on a primitive. `flow` is the air velocity relative to the
/// primitive in its own frame (x forward, y left, z up); moving forward
/// through still air gives f_x < 0 and a drag force pointing backwards.
AeroResult aero_force(const AeroPrimitive& prim, const Vec3& flow);

/// Split the frontal drag coefficient of a whole hull across its sections,
/// proportionally to `weights`, so the section coefficients sum to `hull_cd`.
std::vector<double> distribute_hull_drag(double hull_cd, std::span<const double> weights);

}  // namespace blimp::aero
