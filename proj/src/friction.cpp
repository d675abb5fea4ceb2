#include "patchsim/friction.hpp"

namespace patchsim {

int friction_dof(int dimensionality) {
  return dimensionality == 0 ? 2 : 3;
}

Eigen::Matrix<double, 6, 3> normal_basis() {
  Eigen::Matrix<double, 6, 3> Tn = Eigen::Matrix<double, 6, 3>::Zero();
  Tn(4, 0) = 1.0;  // p_y
  Tn(0, 1) = 1.0;  // m~_x
  Tn(2, 2) = 1.0;  // m~_z
  return Tn;
}

FrictionBasis friction_basis(const RigidBodyState& state, const ContactPatch& patch) {
  if (patch.empty()) throw DataError("friction_basis: empty patch");
  FrictionBasis basis;
  basis.centroid = patch.centroid;
  const Vec3 r = patch.centroid - state.position;
  const int k = friction_dof(patch.dimensionality);
  basis.T_f.resize(6, k);
  basis.T_f.col(0) << r.cross(Vec3::UnitX()), Vec3::UnitX();
  basis.T_f.col(1) << r.cross(Vec3::UnitZ()), Vec3::UnitZ();
  if (k == 3) {
    basis.T_f.col(2) << Vec3::UnitY(), Vec3::Zero();
  }
  return basis;
}

VecX project_friction_target(const Vec6& p, const FrictionBasis& basis) {
  // Remove the normal span (p_y, m_x, m_z components) from both the target
  // and the basis columns, then solve the reduced least squares. The
  // remaining rows (m_y, p_x, p_z) always give T_f full column rank.
  const Eigen::Matrix<double, 6, 3> Tn = normal_basis();
  const Mat6 P = Mat6::Identity() - Tn * Tn.transpose();
  const MatX Tf_t = P * basis.T_f;
  const Vec6 p_t = P * p;
  return (Tf_t.transpose() * Tf_t).ldlt().solve(Tf_t.transpose() * p_t);
}

}  // namespace patchsim
