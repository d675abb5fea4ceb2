#include "patchsim/dynamics.hpp"

#include <Eigen/Cholesky>

namespace patchsim {

bool BodyModel::valid() const {
  if (!(mass > 0.0) || !inertia_body.allFinite()) return false;
  if ((inertia_body - inertia_body.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(inertia_body);
  return es.eigenvalues().minCoeff() > 0.0;
}

AppliedForce gravity_force(const BodyModel& model, double accel) {
  AppliedForce f;
  f.gen_force << 0.0, 0.0, 0.0, 0.0, -accel * model.mass, 0.0;
  return f;
}

Mat6 mass_matrix(const RigidBodyState& state, const BodyModel& model) {
  const Mat3 R = state.orientation.toRotationMatrix();
  Mat6 M = Mat6::Zero();
  M.topLeftCorner<3, 3>() = R * model.inertia_body * R.transpose();
  M.bottomRightCorner<3, 3>() = model.mass * Mat3::Identity();
  return M;
}

Vec6 integrate_velocity(const RigidBodyState& state, const Mat6& M, double h,
                        const AppliedForce& tau, const Vec6& impulse) {
  Eigen::LLT<Mat6> llt(M);
  if (llt.info() != Eigen::Success) {
    throw SolverError("integrate_velocity: mass matrix is not SPD");
  }
  return state.gen_velocity + llt.solve(h * tau.gen_force + impulse);
}

RigidBodyState integrate_position(const RigidBodyState& state,
                                  const Vec6& gen_velocity_next, double h) {
  RigidBodyState next = state;
  next.gen_velocity = gen_velocity_next;
  next.position += h * gen_velocity_next.tail<3>();
  next.orientation = quat_exp(h * gen_velocity_next.head<3>()) * state.orientation;
  next.orientation.normalize();
  return next;
}

Mat36 point_jacobian(const RigidBodyState& state, const Vec3& point_world) {
  Mat36 J;
  J.leftCols<3>() = -skew(point_world - state.position);
  J.rightCols<3>() = Mat3::Identity();
  return J;
}

double kinetic_energy(const RigidBodyState& state, const BodyModel& model) {
  const Mat6 M = mass_matrix(state, model);
  return 0.5 * state.gen_velocity.dot(M * state.gen_velocity);
}

}  // namespace patchsim
