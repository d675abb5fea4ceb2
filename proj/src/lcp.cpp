#include "patchsim/lcp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <limits>
#include <vector>

namespace patchsim {

double lcp_complementarity_residual(const LcpProblem& prob, const VecX& lambda) {
  const VecX w = prob.A * lambda + prob.b;
  double worst = 0.0;
  for (int i = 0; i < lambda.size(); ++i) {
    worst = std::max(worst, std::abs(lambda[i] * w[i]));
  }
  const double scale = std::max({1.0, lambda.cwiseAbs().maxCoeff(),
                                 w.cwiseAbs().maxCoeff()});
  return worst / scale;
}

// ---------------------------------------------------------------------------
// Dantzig principal pivoting (incremental drive-to-zero with index sets).
// ---------------------------------------------------------------------------

namespace {

constexpr double kZeroTol = 1e-12;

enum class IndexState { kFree, kClamped, kSeparated };

// Direction of motion when lambda_d increases by 1 with the clamped set held
// at w = 0: delta_lambda on C solves A_CC x = -A_Cd.
void pivot_direction(const MatX& A, const std::vector<int>& clamped, int d,
                     VecX& dlambda) {
  dlambda.setZero();
  dlambda[d] = 1.0;
  const int m = int(clamped.size());
  if (m == 0) return;
  MatX Acc(m, m);
  VecX rhs(m);
  for (int i = 0; i < m; ++i) {
    rhs[i] = -A(clamped[i], d);
    for (int j = 0; j < m; ++j) Acc(i, j) = A(clamped[i], clamped[j]);
  }
  const VecX x = Acc.ldlt().solve(rhs);
  for (int i = 0; i < m; ++i) dlambda[clamped[i]] = x[i];
}

}  // namespace

VecX solve_lcp_dantzig(const LcpProblem& prob) {
  const int n = int(prob.b.size());
  if (prob.A.rows() != n || prob.A.cols() != n) {
    throw DataError("solve_lcp_dantzig: dimension mismatch");
  }
  if (n == 0) return VecX();
  MatX A = prob.A;
  const double reg = 1e-10 * A.trace() / double(n);
  A.diagonal().array() += reg;

  VecX lambda = VecX::Zero(n);
  VecX w = prob.b;
  std::vector<IndexState> state(n, IndexState::kFree);
  std::vector<int> clamped;

  const double scale = std::max(1.0, prob.b.cwiseAbs().maxCoeff());
  const double tol = kZeroTol * scale;
  const int pivot_budget = std::max(16, n * n);
  int pivots = 0;

  VecX dlambda(n), dw(n);
  for (int d = 0; d < n; ++d) {
    while (w[d] < -tol) {
      pivot_direction(A, clamped, d, dlambda);
      dw.noalias() = A * dlambda;

      // Largest step before an index changes set, smallest index wins ties.
      double step = std::numeric_limits<double>::infinity();
      int limiting = -1;
      bool limiting_is_lambda = false;
      if (dw[d] > kZeroTol) {
        step = -w[d] / dw[d];
        limiting = d;
      }
      for (int k : clamped) {
        if (dlambda[k] < -kZeroTol) {
          const double s = -lambda[k] / dlambda[k];
          if (s < step - kZeroTol || (s < step + kZeroTol && (limiting < 0 || k < limiting))) {
            step = s;
            limiting = k;
            limiting_is_lambda = true;
          }
        }
      }
      for (int k = 0; k < n; ++k) {
        if (state[k] == IndexState::kSeparated && dw[k] < -kZeroTol) {
          const double s = -w[k] / dw[k];
          if (s < step - kZeroTol || (s < step + kZeroTol && (limiting < 0 || k < limiting))) {
            step = s;
            limiting = k;
            limiting_is_lambda = false;
          }
        }
      }
      if (limiting < 0 || !std::isfinite(step)) {
        throw SolverError("solve_lcp_dantzig: unbounded pivot direction (matrix not PSD?)");
      }
      step = std::max(step, 0.0);
      lambda += step * dlambda;
      w += step * dw;

      if (limiting == d) {
        state[d] = IndexState::kClamped;
        clamped.push_back(d);
        break;
      }
      if (limiting_is_lambda) {
        lambda[limiting] = 0.0;
        state[limiting] = IndexState::kSeparated;
        clamped.erase(std::find(clamped.begin(), clamped.end(), limiting));
      } else {
        w[limiting] = 0.0;
        state[limiting] = IndexState::kClamped;
        clamped.push_back(limiting);
      }
      if (++pivots > pivot_budget) {
        throw SolverError("solve_lcp_dantzig: pivot budget exhausted (degenerate problem)");
      }
    }
    if (state[d] == IndexState::kFree) {
      state[d] = IndexState::kSeparated;  // w_d already nonnegative
    }
  }
  for (int i = 0; i < n; ++i) lambda[i] = std::max(lambda[i], 0.0);

  // Polish on the unregularized matrix: re-solve the final active set so the
  // diagonal shift does not bias the answer. Kept only if it remains a valid
  // complementary point (the rank-deficient case stays on the regularized
  // solution).
  if (!clamped.empty()) {
    const int m = int(clamped.size());
    MatX Acc(m, m);
    VecX rhs(m);
    for (int i = 0; i < m; ++i) {
      rhs[i] = -prob.b[clamped[std::size_t(i)]];
      for (int j = 0; j < m; ++j) {
        Acc(i, j) = prob.A(clamped[std::size_t(i)], clamped[std::size_t(j)]);
      }
    }
    const Eigen::FullPivLU<MatX> lu(Acc);
    if (lu.isInvertible()) {
      const VecX x = lu.solve(rhs);
      VecX polished = VecX::Zero(n);
      for (int i = 0; i < m; ++i) polished[clamped[std::size_t(i)]] = x[i];
      const VecX w_pol = prob.A * polished + prob.b;
      if (polished.minCoeff() >= -tol && w_pol.minCoeff() >= -10.0 * tol) {
        return polished.cwiseMax(0.0);
      }
    }
  }
  return lambda;
}

// ---------------------------------------------------------------------------
// Lemke complementary pivoting with lexicographic tie-breaking.
// ---------------------------------------------------------------------------

namespace {

// Row operation tableau: columns [w(n) | z(n) | z0 | q | lex(n)].
// Lexicographic columns start as the identity and make ratio ties strict.
int lex_ratio_test(const MatX& T, int col, int n, int z0_row) {
  const int q_col = 2 * n + 1;
  int best = -1;
  for (int i = 0; i < n; ++i) {
    if (T(i, col) <= 1e-12) continue;
    if (best < 0) {
      best = i;
      continue;
    }
    // Prefer driving z0 out when tied, then lexicographic minimum.
    double r_best = T(best, q_col) / T(best, col);
    double r_i = T(i, q_col) / T(i, col);
    if (r_i < r_best - 1e-12) {
      best = i;
      continue;
    }
    if (r_i > r_best + 1e-12) continue;
    if (best == z0_row) continue;
    if (i == z0_row) {
      best = i;
      continue;
    }
    for (int k = 0; k < n + 1; ++k) {
      const int c = (k == 0) ? q_col : 2 * n + 1 + k;
      const double a = T(i, c) / T(i, col);
      const double b = T(best, c) / T(best, col);
      if (a < b - 1e-12) {
        best = i;
        break;
      }
      if (a > b + 1e-12) break;
    }
  }
  return best;
}

}  // namespace

VecX solve_lcp_lemke(const LcpProblem& prob) {
  const int n = int(prob.b.size());
  if (prob.A.rows() != n || prob.A.cols() != n) {
    throw DataError("solve_lcp_lemke: dimension mismatch");
  }
  if (n == 0) return VecX();
  if (prob.b.minCoeff() >= 0.0) return VecX::Zero(n);

  // Tableau: w - A z - e z0 = q, basis starts as w.
  const int cols = 2 * n + 2 + n;  // w, z, z0, q, lex block
  MatX T = MatX::Zero(n, cols);
  T.block(0, 0, n, n).setIdentity();
  T.block(0, n, n, n) = -prob.A;
  T.col(2 * n).setConstant(-1.0);
  T.col(2 * n + 1) = prob.b;
  T.block(0, 2 * n + 2, n, n).setIdentity();
  std::vector<int> basis(n);
  for (int i = 0; i < n; ++i) basis[i] = i;  // w_i basic

  // Entering z0: pivot on the most negative q row.
  int row;
  T.col(2 * n + 1).minCoeff(&row);
  int entering = 2 * n;

  const int q_col = 2 * n + 1;
  auto do_pivot = [&](int r, int c) {
    T.row(r) /= T(r, c);
    for (int i = 0; i < n; ++i) {
      if (i != r && T(i, c) != 0.0) T.row(i) -= T(i, c) * T.row(r);
    }
    // The basic solution must stay nonnegative; rounding can leave -1e-17s.
    T.col(q_col) = T.col(q_col).cwiseMax(0.0);
  };

  do_pivot(row, entering);
  int z0_row = row;
  int leaving_var = basis[row];
  basis[row] = entering;
  entering = (leaving_var < n) ? leaving_var + n : leaving_var - n;

  const int max_iter = std::max(64, 16 * n);
  for (int iter = 0; iter < max_iter; ++iter) {
    row = lex_ratio_test(T, entering, n, z0_row);
    if (row < 0) {
      throw SolverError("solve_lcp_lemke: ray termination");
    }
    do_pivot(row, entering);
    leaving_var = basis[row];
    basis[row] = entering;
    if (entering == 2 * n) z0_row = row;
    if (row == z0_row && entering != 2 * n) z0_row = -1;
    if (leaving_var == 2 * n) {
      VecX z = VecX::Zero(n);
      for (int i = 0; i < n; ++i) {
        if (basis[i] >= n && basis[i] < 2 * n) z[basis[i] - n] = T(i, q_col);
      }
      return z.cwiseMax(0.0);
    }
    entering = (leaving_var < n) ? leaving_var + n : leaving_var - n;
  }
  throw SolverError("solve_lcp_lemke: iteration budget exhausted");
}

std::optional<VecX> polish_lcp_solution(const LcpProblem& prob, const VecX& z, double tol) {
  const int n = int(z.size());
  const double scale = std::max(1.0, prob.b.cwiseAbs().maxCoeff());
  std::vector<int> active;
  for (int i = 0; i < n; ++i) {
    if (z[i] > 1e-10 * scale) active.push_back(i);
  }
  VecX polished = VecX::Zero(n);
  if (!active.empty()) {
    const int m = int(active.size());
    MatX As(m, m);
    VecX bs(m);
    for (int i = 0; i < m; ++i) {
      bs[i] = -prob.b[active[std::size_t(i)]];
      for (int j = 0; j < m; ++j) {
        As(i, j) = prob.A(active[std::size_t(i)], active[std::size_t(j)]);
      }
    }
    Eigen::CompleteOrthogonalDecomposition<MatX> cod(As);
    const VecX xs = cod.solve(bs);
    if (!xs.allFinite()) return std::nullopt;
    for (int i = 0; i < m; ++i) polished[active[std::size_t(i)]] = xs[i];
  }
  polished = polished.cwiseMax(0.0);
  const VecX w = prob.A * polished + prob.b;
  if (w.minCoeff() < -tol * scale) return std::nullopt;
  if (lcp_complementarity_residual(prob, polished) > tol) return std::nullopt;
  return polished;
}

// ---------------------------------------------------------------------------
// Constraint solves built on the patch.
// ---------------------------------------------------------------------------

MatX static_constraint_jacobian(const RigidBodyState& state, const ContactPatch& patch) {
  if (patch.empty()) throw DataError("static_constraint_jacobian: empty patch");
  switch (patch.dimensionality) {
    case 2:
      return MatX::Identity(6, 6);
    case 1: {
      MatX Jc(5, 6);
      Jc.topRows<3>() = point_jacobian(state, patch.centroid);
      // Angular rows orthogonal to the contact line: rotation about the line
      // stays free.
      const Vec3 d = patch_line_direction(patch.points_world);
      Vec3 u = d.cross(Vec3::UnitY());
      if (u.norm() < 1e-9) u = d.cross(Vec3::UnitX());
      u.normalize();
      const Vec3 v = d.cross(u).normalized();
      Jc.row(3) << u.transpose(), 0.0, 0.0, 0.0;
      Jc.row(4) << v.transpose(), 0.0, 0.0, 0.0;
      return Jc;
    }
    case 0:
      return point_jacobian(state, patch.centroid);
    default:
      throw DataError("static_constraint_jacobian: bad dimensionality");
  }
}

ConstraintSolveResult static_constraint_impulse(const RigidBodyState& state,
                                                const BodyModel& model,
                                                const ContactPatch& patch,
                                                const Vec6& qdot1) {
  const MatX Jc = static_constraint_jacobian(state, patch);
  const Mat6 M = mass_matrix(state, model);
  const Eigen::LLT<Mat6> llt(M);
  if (llt.info() != Eigen::Success) {
    throw SolverError("static_constraint_impulse: mass matrix not SPD");
  }
  if (patch.dimensionality == 2) {
    // Full freeze: Jc = I, so the unique solution is the momentum reversal.
    ConstraintSolveResult out;
    out.impulse = -(M * qdot1);
    out.multipliers = out.impulse;
    const Vec6 qdot_post = qdot1 + llt.solve(out.impulse);
    out.residual = qdot_post.norm() / std::max(1.0, qdot1.norm());
    return out;
  }
  const MatX MinvJt = llt.solve(Jc.transpose());
  MatX S = Jc * MinvJt;  // Delassus operator
  const int m = int(S.rows());
  S.diagonal().array() += 1e-12 * std::max(1.0, S.trace() / double(m));

  const Eigen::LDLT<MatX> sldlt(S);
  const VecX rhs = -(Jc * qdot1);
  const VecX lambda = sldlt.solve(rhs);
  if ((S * lambda - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm())) {
    throw SolverError("static_constraint_impulse: Delassus operator rank-deficient");
  }

  ConstraintSolveResult out;
  out.multipliers = lambda;
  out.impulse = Jc.transpose() * lambda;
  const Vec6 qdot_post = qdot1 + llt.solve(out.impulse);
  out.residual = (Jc * qdot_post).norm() / std::max(1.0, qdot1.norm());
  return out;
}

NormalImpulseResult frictionless_normal_impulse(const RigidBodyState& state,
                                                const BodyModel& model,
                                                const ContactPatch& patch,
                                                const Vec6& qdot2) {
  if (patch.empty()) throw DataError("frictionless_normal_impulse: empty patch");
  const int k = patch.size();
  const Vec3 n = patch.normal;
  const Mat6 M = mass_matrix(state, model);
  const Eigen::LLT<Mat6> llt(M);

  // Rows of the normal-velocity map: row_i = n^T J_i.
  MatX Jn(k, 6);
  for (int i = 0; i < k; ++i) {
    Jn.row(i) = n.transpose() * point_jacobian(state, patch.points_world[i]);
  }
  LcpProblem lcp;
  lcp.A = Jn * llt.solve(Jn.transpose());
  lcp.b = Jn * qdot2;

  NormalImpulseResult out;
  out.lambda = solve_lcp_dantzig(lcp);
  out.complementarity = lcp_complementarity_residual(lcp, out.lambda);
  for (int i = 0; i < k; ++i) {
    out.generalized += Jn.row(i).transpose() * out.lambda[i];
    const Vec3 torque = (patch.points_world[i] - state.position).cross(out.lambda[i] * n);
    out.p_n[0] += out.lambda[i];
    out.p_n[1] += torque.x();
    out.p_n[2] += torque.z();
  }
  return out;
}

}  // namespace patchsim
