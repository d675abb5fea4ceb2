#pragma once

#include "patchsim/collision.hpp"
#include "patchsim/dynamics.hpp"
#include "patchsim/types.hpp"

namespace patchsim {

/// Maps the low-dimensional friction impulse p_f to generalized coordinates.
/// Columns are unit tangential impulses at the patch centroid (x, z world
/// axes) and, for 1D/2D patches, a unit torque about the normal axis through
/// the centroid. 0D patches cannot transmit torsional friction, so k = 2.
struct FrictionBasis {
  Eigen::Matrix<double, 6, Eigen::Dynamic> T_f;  // 6 x k, k in {2, 3}
  Vec3 centroid = Vec3::Zero();

  int dof() const { return int(T_f.cols()); }
};

/// Number of friction components for a patch dimensionality: 2 for 0D
/// (p_x, p_z), 3 otherwise (p_x, p_z, m_y).
int friction_dof(int dimensionality);

/// T_n: fixed 6x3 map from the normal impulse (p_y, m~_x, m~_z) to
/// generalized coordinates.
Eigen::Matrix<double, 6, 3> normal_basis();

FrictionBasis friction_basis(const RigidBodyState& state, const ContactPatch& patch);

/// Least-squares coefficients c of T_f c ~ p after removing the normal
/// content (the span of T_n) from both sides. Used to build regressor
/// training targets from recovered impulses.
VecX project_friction_target(const Vec6& p, const FrictionBasis& basis);

}  // namespace patchsim
