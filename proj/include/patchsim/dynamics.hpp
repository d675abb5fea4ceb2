#pragma once

#include "patchsim/types.hpp"

namespace patchsim {

struct ConvexShape;

/// Generalized-coordinate state of one rigid body. The 6-vector velocity
/// stacks world-frame angular velocity above world-frame COM linear velocity,
/// which keeps the mass matrix block-diagonal.
struct RigidBodyState {
  Vec3 position = Vec3::Zero();        // COM, world frame [m]
  Quat orientation = Quat::Identity(); // world-from-body
  Vec6 gen_velocity = Vec6::Zero();    // [w (rad/s); v (m/s)]

  Vec3 angular() const { return gen_velocity.head<3>(); }
  Vec3 linear() const { return gen_velocity.tail<3>(); }
};

/// Inertial description of a body. `shape` is non-owning; the caller keeps
/// the shape alive for the lifetime of the model.
struct BodyModel {
  double mass = 1.0;                 // kg, > 0
  Mat3 inertia_body = Mat3::Identity(); // about COM, body frame [kg m^2]
  const ConvexShape* shape = nullptr;

  bool valid() const;
};

/// Generalized applied force: torque about COM stacked above linear force,
/// both world frame.
struct AppliedForce {
  Vec6 gen_force = Vec6::Zero();
};

/// Gravity acting along -y with the given acceleration magnitude.
AppliedForce gravity_force(const BodyModel& model, double accel = kGravity);

/// M = diag(R I_body R^T, m I3). Symmetric positive-definite for a valid model.
Mat6 mass_matrix(const RigidBodyState& state, const BodyModel& model);

/// qdot + M^{-1} (h tau + p). Throws SolverError if M is not SPD.
Vec6 integrate_velocity(const RigidBodyState& state, const Mat6& M, double h,
                        const AppliedForce& tau, const Vec6& impulse);

/// Semi-implicit position update: position by h*v, orientation by the
/// exponential map of h*w, quaternion renormalized.
RigidBodyState integrate_position(const RigidBodyState& state,
                                  const Vec6& gen_velocity_next, double h);

/// 3x6 map from generalized velocity to the Cartesian velocity of a material
/// point: J qdot = w x (point - COM) + v.
Mat36 point_jacobian(const RigidBodyState& state, const Vec3& point_world);

/// Kinetic energy 0.5 qdot^T M qdot.
double kinetic_energy(const RigidBodyState& state, const BodyModel& model);

}  // namespace patchsim
