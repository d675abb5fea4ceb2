#pragma once

#include <optional>

#include "patchsim/collision.hpp"
#include "patchsim/dynamics.hpp"
#include "patchsim/types.hpp"

namespace patchsim {

/// Standard LCP data: find lambda >= 0 with w = A lambda + b >= 0 and
/// lambda^T w = 0.
struct LcpProblem {
  MatX A;
  VecX b;
};

/// Worst complementarity product |lambda_i w_i| relative to the problem
/// scale max(1, |lambda|_inf, |w|_inf), with w recomputed from (A, b).
double lcp_complementarity_residual(const LcpProblem& prob, const VecX& lambda);

/// Dantzig-style principal pivoting for symmetric PSD problems. The diagonal
/// is regularized by 1e-10 * trace(A)/n before pivoting so coplanar contact
/// point sets stay solvable. Throws SolverError after the pivot budget.
VecX solve_lcp_dantzig(const LcpProblem& prob);

/// Lemke's complementary pivoting with lexicographic tie-breaking, for the
/// copositive-plus matrices of the friction-pyramid formulation. Throws
/// SolverError on ray termination.
VecX solve_lcp_lemke(const LcpProblem& prob);

/// Re-solves the active set of a candidate solution against the original
/// problem (min-norm on rank-deficient sets) and returns the polished vector
/// when it satisfies the complementarity conditions at the given tolerance.
std::optional<VecX> polish_lcp_solution(const LcpProblem& prob, const VecX& z, double tol = 1e-8);

/// Result of the static-case positional constraint solve.
struct ConstraintSolveResult {
  Vec6 impulse = Vec6::Zero();  // p = Jc^T lambda
  VecX multipliers;             // lambda
  double residual = 0.0;        // |Jc (qdot1 + M^-1 p)| / velocity scale
};

/// Constraint rows that freeze the patch, by dimensionality: 2D -> 6 (full
/// body), 1D -> 5 (everything but rotation about the contact line),
/// 0D -> 3 (centroid linear velocity).
MatX static_constraint_jacobian(const RigidBodyState& state, const ContactPatch& patch);

/// Solves Jc M^-1 Jc^T lambda = -Jc qdot1 and returns p = Jc^T lambda so the
/// patch has zero velocity after the impulse. Throws SolverError if the
/// Delassus operator is rank-deficient beyond regularization.
ConstraintSolveResult static_constraint_impulse(const RigidBodyState& state,
                                                const BodyModel& model,
                                                const ContactPatch& patch,
                                                const Vec6& qdot1);

/// Per-point frictionless normal LCP at the patch.
struct NormalImpulseResult {
  Vec3 p_n = Vec3::Zero();        // (p_y, m~_x, m~_z)
  Vec6 generalized = Vec6::Zero(); // sum_i J_i^T (lambda_i n)
  VecX lambda;                    // per-point normal impulses
  double complementarity = 0.0;
};

/// Solves the frictionless contact LCP with A_ij = n^T J_i M^-1 J_j^T n and
/// b_i = normal velocity of point i under qdot2. All post-impulse point
/// normal velocities end >= -1e-8.
NormalImpulseResult frictionless_normal_impulse(const RigidBodyState& state,
                                                const BodyModel& model,
                                                const ContactPatch& patch,
                                                const Vec6& qdot2);

}  // namespace patchsim
