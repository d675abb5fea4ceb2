#pragma once

#include "patchsim/collision.hpp"
#include "patchsim/dynamics.hpp"
#include "patchsim/lcp.hpp"
#include "patchsim/types.hpp"

namespace patchsim {

/// Ground-truth contact solve diagnostics.
struct GtImpulseResult {
  Vec6 impulse = Vec6::Zero();
  VecX normal_lambda;          // per patch point
  double complementarity = 0.0;
  double max_pyramid_violation = 0.0;  // friction beyond mu * lambda_n
  bool used_pgs_fallback = false;
};

/// Reference contact handler: per patch point, one normal direction and four
/// friction directions (+-x, +-z scaled by mu_x, mu_z) under a single
/// pyramid coupling per point. Solved with Lemke; falls back to 200
/// iterations of projected Gauss-Seidel on ray termination.
GtImpulseResult gt_contact_impulse(const RigidBodyState& state, const BodyModel& model,
                                   const ContactPatch& patch, const AppliedForce& tau,
                                   const GroundPlane& ground, double h);

}  // namespace patchsim
