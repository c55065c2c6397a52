#include "blimp/multibody.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blimp {

double dead_zone(double x, double half_range) {
    if (x > half_range) return x - half_range;
    if (x < -half_range) return x + half_range;
    return 0.0;
}

Vec3 intrinsic_xyz(const Mat3& r) {
    const double sb = std::clamp(r(0, 2), -1.0, 1.0);
    return {std::atan2(-r(1, 2), r(2, 2)), std::asin(sb), std::atan2(-r(0, 1), r(0, 0))};
}

Quat from_intrinsic_xyz(const Vec3& a) {
    return Quat(Eigen::AngleAxisd(a.x(), Vec3::UnitX()) * Eigen::AngleAxisd(a.y(), Vec3::UnitY()) *
                Eigen::AngleAxisd(a.z(), Vec3::UnitZ()));
}

namespace {

struct JointKinematics {
    Mat3 parent_axes;   // parent joint frame -> world
    Vec3 anchor_parent; // world
    Vec3 anchor_child;  // world
    JointDisplacement disp;
};

JointKinematics kinematics(const JointSpec& j, const BodyState& p, const BodyState& c) {
    JointKinematics k;
    const Quat qp = p.orientation * j.parent_frame;
    const Quat qc = c.orientation * j.child_frame;
    k.parent_axes = qp.toRotationMatrix();
    const Mat3 rt = k.parent_axes.transpose();

    k.anchor_parent = p.to_world(j.parent_anchor);
    k.anchor_child = c.to_world(j.child_anchor);
    k.disp.linear = rt * (k.anchor_child - k.anchor_parent);
    k.disp.linear_rate = rt * (c.point_velocity(j.child_anchor) - p.point_velocity(j.parent_anchor));

    k.disp.angular = intrinsic_xyz((qp.conjugate() * qc).toRotationMatrix());
    const Vec3 w_rel = c.orientation * c.angular_velocity - p.orientation * p.angular_velocity;
    k.disp.angular_rate = rt * w_rel;
    return k;
}

}  // namespace

JointDisplacement joint_displacement(const JointSpec& joint, const BodyState& parent,
                                     const BodyState& child) {
    return kinematics(joint, parent, child).disp;
}

JointWrenches joint_wrench(const JointSpec& j, const BodyState& p, const BodyState& c) {
    const JointKinematics k = kinematics(j, p, c);

    Vec3 f_local;
    Vec3 t_local;
    for (int i = 0; i < 3; ++i) {
        f_local[i] = -j.k_lin[i] * dead_zone(k.disp.linear[i], j.free_play_lin[i]) -
                     j.c_lin[i] * k.disp.linear_rate[i];
        t_local[i] = -j.k_rot[i] * dead_zone(k.disp.angular[i] - j.rot_target[i], j.free_play_rot[i]) -
                     j.c_rot[i] * k.disp.angular_rate[i];
    }
    const Vec3 force = k.parent_axes * f_local;
    const Vec3 torque = k.parent_axes * t_local;
    const Vec3 mid = 0.5 * (k.anchor_parent + k.anchor_child);

    JointWrenches out;
    out.on_child.force = force;
    out.on_child.torque = torque + (mid - c.position).cross(force);
    out.on_parent.force = -force;
    out.on_parent.torque = -torque + (mid - p.position).cross(-force);
    return out;
}

double joint_potential_energy(const JointSpec& j, const BodyState& p, const BodyState& c) {
    const JointDisplacement d = joint_displacement(j, p, c);
    double e = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double dl = dead_zone(d.linear[i], j.free_play_lin[i]);
        const double da = dead_zone(d.angular[i] - j.rot_target[i], j.free_play_rot[i]);
        e += 0.5 * j.k_lin[i] * dl * dl + 0.5 * j.k_rot[i] * da * da;
    }
    return e;
}

BodyId World::add_body(BodyPrimitive body, const BodyState& state) {
    if (!(body.mass > 0.0)) throw NonPositiveMass("body '" + body.name + "' has non-positive mass");
    Eigen::LLT<Mat3> llt(body.inertia);
    if (llt.info() != Eigen::Success || !body.inertia.isApprox(body.inertia.transpose()))
        throw std::invalid_argument("body '" + body.name + "': inertia must be symmetric positive definite");
    for (const auto& b : bodies_)
        if (b.name == body.name) throw std::invalid_argument("duplicate body name '" + body.name + "'");

    inverse_inertia_.push_back(body.inertia.inverse());
    bodies_.push_back(std::move(body));
    BodyState s = state;
    s.orientation.normalize();
    states_.push_back(s);
    force_acc_.emplace_back(Vec3::Zero());
    torque_acc_.emplace_back(Vec3::Zero());
    return BodyId{bodies_.size() - 1};
}

JointId World::add_joint(JointSpec joint) {
    const BodyId parent = find_body(joint.parent);
    const BodyId child = find_body(joint.child);
    if (parent == child) throw std::invalid_argument("joint '" + joint.name + "' connects a body to itself");
    for (const Vec3* v : {&joint.k_lin, &joint.c_lin, &joint.k_rot, &joint.c_rot, &joint.free_play_lin,
                          &joint.free_play_rot})
        if ((v->array() < 0.0).any())
            throw std::invalid_argument("joint '" + joint.name + "': negative stiffness, damping or free play");
    joints_.push_back(Joint{std::move(joint), parent, child});
    return JointId{joints_.size() - 1};
}

BodyId World::find_body(const std::string& name) const {
    for (std::size_t i = 0; i < bodies_.size(); ++i)
        if (bodies_[i].name == name) return BodyId{i};
    throw DanglingReference("unknown body '" + name + "'");
}

JointId World::find_joint(const std::string& name) const {
    for (std::size_t i = 0; i < joints_.size(); ++i)
        if (joints_[i].spec.name == name) return JointId{i};
    throw DanglingReference("unknown joint '" + name + "'");
}

double World::total_mass() const {
    double m = 0.0;
    for (const auto& b : bodies_) m += b.mass;
    return m;
}

void World::step(double dt, std::span<const Wrench> external) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    const std::size_t n = bodies_.size();

    for (std::size_t i = 0; i < n; ++i) {
        force_acc_[i].setZero();
        torque_acc_[i].setZero();
        if (gravity_enabled) force_acc_[i].z() -= bodies_[i].mass * kGravity;
        if (ground.enabled) {
            const BodyState& s = states_[i];
            const double depth = ground.height - s.position.z();
            if (depth > 0.0)
                force_acc_[i].z() += std::max(0.0, ground.stiffness * depth - ground.damping * s.velocity.z());
        }
    }
    for (const Joint& j : joints_) {
        const JointWrenches w = joint_wrench(j.spec, states_[j.parent.index], states_[j.child.index]);
        force_acc_[j.parent.index] += w.on_parent.force;
        torque_acc_[j.parent.index] += w.on_parent.torque;
        force_acc_[j.child.index] += w.on_child.force;
        torque_acc_[j.child.index] += w.on_child.torque;
    }
    for (const Wrench& w : external) {
        force_acc_.at(w.body.index) += w.force;
        torque_acc_.at(w.body.index) += w.torque;
    }

    for (std::size_t i = 0; i < n; ++i) {
        BodyState& s = states_[i];
        const BodyPrimitive& b = bodies_[i];
        s.velocity += force_acc_[i] * (dt / b.mass);
        s.position += s.velocity * dt;

        const Vec3 torque_body = s.orientation.conjugate() * torque_acc_[i];
        const Vec3& w = s.angular_velocity;
        s.angular_velocity += inverse_inertia_[i] * (torque_body - w.cross(b.inertia * w)) * dt;

        const double angle = s.angular_velocity.norm() * dt;
        if (angle > 0.0)
            s.orientation = s.orientation * Quat(Eigen::AngleAxisd(angle, s.angular_velocity.normalized()));
        s.orientation.normalize();
    }
    time_ += dt;
    check_finite();
}

void World::check_finite() const {
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const BodyState& s = states_[i];
        if (!s.position.allFinite() || !s.velocity.allFinite() || !s.angular_velocity.allFinite() ||
            !s.orientation.coeffs().allFinite())
            throw NonFiniteState(time_, "non-finite state in body '" + bodies_[i].name + "' at t=" +
                                            std::to_string(time_) + " s");
    }
}

Momentum World::total_momentum() const {
    Momentum m;
    for (std::size_t i = 0; i < bodies_.size(); ++i) {
        const BodyState& s = states_[i];
        const Vec3 p = bodies_[i].mass * s.velocity;
        m.linear += p;
        m.angular += s.position.cross(p) + s.orientation * (bodies_[i].inertia * s.angular_velocity);
    }
    return m;
}

double World::mechanical_energy() const {
    double e = 0.0;
    for (std::size_t i = 0; i < bodies_.size(); ++i) {
        const BodyState& s = states_[i];
        const BodyPrimitive& b = bodies_[i];
        e += 0.5 * b.mass * s.velocity.squaredNorm() + 0.5 * s.angular_velocity.dot(b.inertia * s.angular_velocity);
        if (gravity_enabled) e += b.mass * kGravity * s.position.z();
    }
    for (const Joint& j : joints_) e += joint_potential_energy(j.spec, states_[j.parent.index], states_[j.child.index]);
    return e;
}

}  // namespace blimp
