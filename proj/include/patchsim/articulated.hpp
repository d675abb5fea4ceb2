#pragma once

#include <functional>
#include <string>
#include <vector>

#include "patchsim/simulate.hpp"

namespace patchsim {

/// One revolute link of the upstream serial chain. The joint axis is fixed
/// in the parent link frame; the link frame coincides with the parent frame
/// at zero joint angle.
struct ChainLink {
  double mass = 1.0;
  Mat3 inertia = Mat3::Identity();  // about COM, link frame
  Vec3 axis = Vec3::UnitZ();        // revolute axis, parent frame
  Vec3 com_offset = Vec3::Zero();   // COM, link frame, from the joint
  Vec3 tip_offset = Vec3::Zero();   // next anchor, link frame, from the joint
};

/// Serial revolute chain pinned to the world at its base.
struct UpstreamChain {
  Vec3 pin_world = Vec3::Zero();
  std::vector<ChainLink> links;
  VecX theta;      // joint angles
  VecX theta_dot;  // joint rates

  int dof() const { return int(links.size()); }
};

/// World-frame kinematic and dynamic quantities of the chain at its current
/// configuration.
struct ChainKinematics {
  std::vector<Mat3> rotation;     // per link
  std::vector<Vec3> joint_pos;    // per link, world
  std::vector<Vec3> axis_world;   // per link
  std::vector<Vec3> com;          // per link, world
  Vec3 tip = Vec3::Zero();        // distal anchor on the chain side
  MatX tip_jacobian;              // 3 x dof
  MatX mass_matrix;               // dof x dof
  VecX bias;                      // Coriolis/centrifugal + gravity torques
};

ChainKinematics compute_chain_kinematics(const UpstreamChain& chain,
                                         double gravity_accel = kGravity);

/// Distal free body attached to the chain tip by a 3-DOF ball constraint.
struct ArticulatedSystem {
  UpstreamChain chain;
  RigidBodyState distal;
  BodyModel distal_model;
  Vec3 anchor_local = Vec3::Zero();  // ball anchor, distal body frame

  Vec3 anchor_world() const {
    return distal.position + distal.orientation.toRotationMatrix() * anchor_local;
  }
  /// Distance between the distal anchor and the chain tip.
  double anchor_gap() const;
};

/// J maps distal generalized velocity to the anchor's Cartesian velocity;
/// Jhat maps chain joint rates likewise at the chain tip.
struct JointJacobians {
  Mat36 J;
  MatX Jhat;
};
JointJacobians joint_jacobians(const ArticulatedSystem& sys);

/// Heuristic initial joint force assuming the upstream velocity vanishes at
/// the end of the step. Throws SolverError if the chain Delassus operator is
/// singular.
Vec3 initial_joint_force_guess(const ArticulatedSystem& sys, double h,
                               double gravity_accel = kGravity);

struct RootSolveReport {
  VecX solution;
  double residual_norm = 0.0;
  int g_evaluations = 0;
  bool converged = false;
  int class_flips = 0;  // classifier branch changes between G evaluations
};

/// Powell hybrid (dogleg trust region) root finder with a forward-difference
/// Jacobian and Broyden rank-1 updates. Stops when |G| <= tol or the
/// evaluation budget is hit.
RootSolveReport powell_hybrid_solve(const std::function<VecX(const VecX&)>& G,
                                    const VecX& x0, double tol, int max_evaluations = 40);

/// Contact impulse of the distal body as a function of the joint force.
using DistalContactFn =
    std::function<Vec6(const RigidBodyState&, const BodyModel&, const ContactPatch&,
                       const AppliedForce&)>;

/// The joint-velocity mismatch G(f_j) = A f_j + J M^-1 H(f_j) + c whose root
/// couples the chain and the contact.
Vec3 evaluate_joint_residual(const ArticulatedSystem& sys, const Vec3& f_j,
                             const DistalContactFn& contact, const ContactPatch* patch,
                             double h, double gravity_accel = kGravity);

struct ArticulatedStepReport {
  RootSolveReport root;
  bool in_contact = false;
  Vec6 contact_impulse = Vec6::Zero();
  Vec3 joint_force = Vec3::Zero();
  double anchor_drift_before_projection = 0.0;
  PropertyStats contact_stats;
};

/// One coupled time step: solve f_j (linearly without contact, by Powell's
/// method with contact), apply the handler impulse, integrate both
/// subsystems, and re-project the distal anchor onto the chain tip. Throws
/// SimulationError if the root solve does not converge.
ArticulatedStepReport step_articulated(ArticulatedSystem& sys, const HandlerConfig& handler,
                                       const GroundPlane& ground, double h,
                                       double gravity_accel = kGravity);

/// Tolerance scale for the joint solve: max(|c|, |J qdot|, 1e-6).
double joint_residual_scale(const ArticulatedSystem& sys, double h,
                            double gravity_accel = kGravity);

/// Default demo system: two slender upstream links and the standard box as
/// the distal body, pinned so the chain swings from horizontal down to the
/// ground.
ArticulatedSystem make_three_link_demo(const ConvexShape* box_shape);

/// Chain file: pin location, one 'link' line per upstream link, distal mass,
/// anchor, and shape name.
ArticulatedSystem load_chain(const std::string& path, const ConvexShape* shape);
void save_chain(const ArticulatedSystem& sys, const std::string& path);

}  // namespace patchsim
