#pragma once

#include "blimp/types.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace blimp {

struct BodyId {
    std::size_t index = 0;
    friend bool operator==(BodyId, BodyId) = default;
};

struct JointId {
    std::size_t index = 0;
    friend bool operator==(JointId, JointId) = default;
};

enum class ShapeKind { Box, Cylinder, EllipsoidSection };

/// Geometric descriptor used for mass-property defaults and reporting.
/// Box: x/y/z edge lengths. Cylinder: length along x, diameter, unused.
/// EllipsoidSection: length along x, diameter, unused.
struct Shape {
    ShapeKind kind = ShapeKind::Box;
    Vec3 dims = Vec3::Zero();
};

/// A rigid component. The body frame origin is its centre of mass.
struct BodyPrimitive {
    std::string name;
    double mass = 0.0;                 // kg
    Mat3 inertia = Mat3::Identity();   // kg m^2, about the centre of mass, body frame
    Shape shape;
};

struct BodyState {
    Vec3 position = Vec3::Zero();          // m, world
    Quat orientation = Quat::Identity();   // body -> world
    Vec3 velocity = Vec3::Zero();          // m/s, world
    Vec3 angular_velocity = Vec3::Zero();  // rad/s, body frame

    /// World-frame velocity of a point given in body coordinates.
    Vec3 point_velocity(const Vec3& body_point) const {
        return velocity + orientation * angular_velocity.cross(body_point);
    }
    Vec3 to_world(const Vec3& body_point) const { return position + orientation * body_point; }
};

/// Spring-damper connection between two bodies. Springs act on the
/// displacement beyond the per-axis free-play half range, dampers act everywhere.
/// Rotational displacement is the intrinsic XYZ decomposition of the child joint
/// frame relative to the parent joint frame (valid for |angle| < 0.5 rad).
struct JointSpec {
    std::string name;
    std::string parent;
    std::string child;

    Vec3 parent_anchor = Vec3::Zero();       // m, parent body frame
    Quat parent_frame = Quat::Identity();    // joint axes in parent body frame
    Vec3 child_anchor = Vec3::Zero();        // m, child body frame
    Quat child_frame = Quat::Identity();     // joint axes in child body frame

    Vec3 k_lin = Vec3::Zero();   // N/m
    Vec3 c_lin = Vec3::Zero();   // N s/m
    Vec3 k_rot = Vec3::Zero();   // N m/rad
    Vec3 c_rot = Vec3::Zero();   // N m s/rad
    Vec3 free_play_lin = Vec3::Zero();   // m
    Vec3 free_play_rot = Vec3::Zero();   // rad

    /// Rest angles of the rotational spring (servo targets), rad.
    Vec3 rot_target = Vec3::Zero();

    /// Joint belongs to the envelope structure and is softened by deflation.
    bool deformable = false;
};

/// Force and torque acting on one body. Torque is about the body's centre of
/// mass; both are expressed in the world frame.
struct Wrench {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
    BodyId body;

    /// Wrench of a world-frame force applied at a world-frame point.
    static Wrench at_point(BodyId body, const BodyState& state, const Vec3& force,
                           const Vec3& world_point) {
        return Wrench{force, (world_point - state.position).cross(force), body};
    }
};

struct JointWrenches {
    Wrench on_parent;
    Wrench on_child;
};

/// Relative joint displacement, expressed in the parent joint frame.
struct JointDisplacement {
    Vec3 linear = Vec3::Zero();     // m
    Vec3 angular = Vec3::Zero();    // rad, intrinsic XYZ
    Vec3 linear_rate = Vec3::Zero();
    Vec3 angular_rate = Vec3::Zero();
};

JointDisplacement joint_displacement(const JointSpec& joint, const BodyState& parent,
                                     const BodyState& child);

/// Equal and opposite spring-damper wrench pair. Both forces act at the midpoint
/// of the two anchors so the pair has zero net moment about any point.
JointWrenches joint_wrench(const JointSpec& joint, const BodyState& parent,
                           const BodyState& child);

/// Potential energy stored in the joint springs.
double joint_potential_energy(const JointSpec& joint, const BodyState& parent,
                              const BodyState& child);

/// Intrinsic X-Y-Z angles (R = Rx(a) Ry(b) Rz(c)).
Vec3 intrinsic_xyz(const Mat3& r);
Quat from_intrinsic_xyz(const Vec3& angles);

double dead_zone(double x, double half_range);

/// One-sided vertical spring-damper that stops falling bodies.
struct GroundContact {
    bool enabled = false;
    double height = 0.0;       // m
    double stiffness = 5.0e3;  // N/m
    double damping = 5.0e2;    // N s/m
};

struct Momentum {
    Vec3 linear = Vec3::Zero();    // kg m/s
    Vec3 angular = Vec3::Zero();   // kg m^2/s, about the world origin
};

class World {
public:
    BodyId add_body(BodyPrimitive body, const BodyState& state);
    JointId add_joint(JointSpec joint);

    /// Advance every body by one semi-implicit Euler step.
    void step(double dt, std::span<const Wrench> external = {});

    Momentum total_momentum() const;
    /// Kinetic + joint spring potential (+ gravity potential when enabled).
    double mechanical_energy() const;

    std::size_t body_count() const { return bodies_.size(); }
    std::size_t joint_count() const { return joints_.size(); }

    const BodyPrimitive& body(BodyId id) const { return bodies_.at(id.index); }
    const BodyState& state(BodyId id) const { return states_.at(id.index); }
    BodyState& state(BodyId id) { return states_.at(id.index); }

    const JointSpec& joint(JointId id) const { return joints_.at(id.index).spec; }
    JointSpec& joint(JointId id) { return joints_.at(id.index).spec; }
    BodyId joint_parent(JointId id) const { return joints_.at(id.index).parent; }
    BodyId joint_child(JointId id) const { return joints_.at(id.index).child; }

    /// Throws DanglingReference for an unknown name.
    BodyId find_body(const std::string& name) const;
    JointId find_joint(const std::string& name) const;

    double time() const { return time_; }
    double total_mass() const;

    bool gravity_enabled = true;
    GroundContact ground;

private:
    struct Joint {
        JointSpec spec;
        BodyId parent;
        BodyId child;
    };

    void check_finite() const;

    std::vector<BodyPrimitive> bodies_;
    std::vector<BodyState> states_;
    std::vector<Mat3> inverse_inertia_;
    std::vector<Joint> joints_;
    std::vector<Vec3> force_acc_;
    std::vector<Vec3> torque_acc_;
    double time_ = 0.0;
};

}  // namespace blimp
