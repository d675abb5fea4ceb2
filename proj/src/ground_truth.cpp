#include "patchsim/ground_truth.hpp"

#include <Eigen/Cholesky>
#include <vector>

namespace patchsim {

namespace {

// Projects (fx, fz) onto the pyramid section |fx|/bx + |fz|/bz <= 1 by
// scaling toward the origin.
void clamp_to_pyramid(double& fx, double& fz, double bx, double bz) {
  if (bx <= 0.0) fx = 0.0;
  if (bz <= 0.0) fz = 0.0;
  const double load = (bx > 0.0 ? std::abs(fx) / bx : 0.0) +
                      (bz > 0.0 ? std::abs(fz) / bz : 0.0);
  if (load > 1.0) {
    fx /= load;
    fz /= load;
  }
}

// Impulse-space projected Gauss-Seidel over the patch, used only when Lemke
// ray-terminates on a degenerate configuration.
GtImpulseResult solve_pgs(const RigidBodyState& state, const Eigen::LLT<Mat6>& llt,
                          const ContactPatch& patch, const FrictionSpec& mu,
                          const Vec6& qdot1) {
  const int k = patch.size();
  const Vec3 n = patch.normal;
  std::vector<Mat36> J{std::size_t(k)};
  std::vector<Mat3> eff_inv{std::size_t(k)};  // J M^-1 J^T per point
  for (int i = 0; i < k; ++i) {
    J[std::size_t(i)] = point_jacobian(state, patch.points_world[std::size_t(i)]);
    eff_inv[std::size_t(i)] =
        J[std::size_t(i)] * llt.solve(J[std::size_t(i)].transpose());
  }
  VecX lam = VecX::Zero(k), fx = VecX::Zero(k), fz = VecX::Zero(k);
  Vec6 qdot = qdot1;
  for (int iter = 0; iter < 200; ++iter) {
    for (int i = 0; i < k; ++i) {
      const std::size_t ii = std::size_t(i);
      const Vec3 v = J[ii] * qdot;
      // Normal clamp.
      const double a_nn = eff_inv[ii](1, 1);
      double dlam = a_nn > 0.0 ? -v.y() / a_nn : 0.0;
      dlam = std::max(dlam, -lam[i]);
      // Tangential stop, then pyramid clamp.
      const Eigen::Matrix2d At = (Eigen::Matrix2d() << eff_inv[ii](0, 0), eff_inv[ii](0, 2),
                                  eff_inv[ii](2, 0), eff_inv[ii](2, 2))
                                     .finished();
      const Eigen::Vector2d vt(v.x(), v.z());
      Eigen::Vector2d df = -At.ldlt().solve(vt);
      double nfx = fx[i] + df.x(), nfz = fz[i] + df.y();
      const double nlam = lam[i] + dlam;
      clamp_to_pyramid(nfx, nfz, mu.mu_x * nlam, mu.mu_z * nlam);
      const Vec3 dimp(nfx - fx[i], dlam, nfz - fz[i]);
      qdot += llt.solve(J[ii].transpose() * dimp);
      lam[i] = nlam;
      fx[i] = nfx;
      fz[i] = nfz;
    }
  }
  GtImpulseResult out;
  out.used_pgs_fallback = true;
  out.normal_lambda = lam;
  for (int i = 0; i < k; ++i) {
    const Vec3 imp(fx[i], lam[i], fz[i]);
    out.impulse += J[std::size_t(i)].transpose() * imp;
  }
  // Workless-condition residual of the converged iteration.
  double worst = 0.0, scale = 1.0;
  for (int i = 0; i < k; ++i) {
    const double vn = (J[std::size_t(i)] * qdot).y();
    worst = std::max(worst, std::abs(lam[i] * vn));
    scale = std::max({scale, std::abs(lam[i]), std::abs(vn)});
  }
  out.complementarity = worst / scale;
  return out;
}

}  // namespace

GtImpulseResult gt_contact_impulse(const RigidBodyState& state, const BodyModel& model,
                                   const ContactPatch& patch, const AppliedForce& tau,
                                   const GroundPlane& ground, double h) {
  if (patch.empty()) throw DataError("gt_contact_impulse: empty patch");
  const Mat6 M = mass_matrix(state, model);
  const Eigen::LLT<Mat6> llt(M);
  const Vec6 qdot1 = state.gen_velocity + h * llt.solve(tau.gen_force);
  const int k = patch.size();
  const Vec3 n = patch.normal;
  const FrictionSpec mu = ground.friction;

  // Generalized directions: one normal per point, then the scaled friction
  // directions that have a positive coefficient.
  std::vector<Vec3> dirs;
  if (mu.mu_x > 0.0) {
    dirs.push_back(mu.mu_x * Vec3::UnitX());
    dirs.push_back(-mu.mu_x * Vec3::UnitX());
  }
  if (mu.mu_z > 0.0) {
    dirs.push_back(mu.mu_z * Vec3::UnitZ());
    dirs.push_back(-mu.mu_z * Vec3::UnitZ());
  }
  const int nd = int(dirs.size());

  MatX N(6, k), D(6, k * nd);
  std::vector<Mat36> J{std::size_t(k)};
  for (int i = 0; i < k; ++i) {
    J[std::size_t(i)] = point_jacobian(state, patch.points_world[std::size_t(i)]);
    N.col(i) = J[std::size_t(i)].transpose() * n;
    for (int j = 0; j < nd; ++j) {
      D.col(i * nd + j) = J[std::size_t(i)].transpose() * dirs[std::size_t(j)];
    }
  }

  if (nd == 0) {
    // Frictionless ground: plain normal LCP.
    LcpProblem lcp;
    lcp.A = N.transpose() * llt.solve(N);
    lcp.b = N.transpose() * qdot1;
    GtImpulseResult out;
    out.normal_lambda = solve_lcp_dantzig(lcp);
    out.complementarity = lcp_complementarity_residual(lcp, out.normal_lambda);
    out.impulse = N * out.normal_lambda;
    return out;
  }

  // Stewart-Trinkle style tableau over [lambda; beta; gamma].
  const int nv = k + k * nd + k;
  MatX A = MatX::Zero(nv, nv);
  VecX b = VecX::Zero(nv);
  const MatX MinvN = llt.solve(N);
  const MatX MinvD = llt.solve(D);
  A.block(0, 0, k, k) = N.transpose() * MinvN;
  A.block(0, k, k, k * nd) = N.transpose() * MinvD;
  A.block(k, 0, k * nd, k) = D.transpose() * MinvN;
  A.block(k, k, k * nd, k * nd) = D.transpose() * MinvD;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < nd; ++j) {
      A(k + i * nd + j, k + k * nd + i) = 1.0;   // + gamma_i in friction rows
      A(k + k * nd + i, k + i * nd + j) = -1.0;  // - sum beta in cone row
    }
    A(k + k * nd + i, i) = 1.0;  // + lambda_i in cone row
  }
  b.head(k) = N.transpose() * qdot1;
  b.segment(k, k * nd) = D.transpose() * qdot1;

  // Lemke with an active-set polish; degenerate coplanar patches sometimes
  // leave the tableau solution inaccurate, in which case a graded
  // perturbation of b resolves the ties and the polish projects the answer
  // back onto the original problem. PGS is the last resort.
  const LcpProblem lcp{A, b};
  std::optional<VecX> z;
  auto attempt = [&](const VecX& rhs) -> std::optional<VecX> {
    try {
      const VecX raw = solve_lcp_lemke({A, rhs});
      if (auto p = polish_lcp_solution(lcp, raw)) return p;
      if (lcp_complementarity_residual(lcp, raw) <= 1e-8 &&
          (A * raw + b).minCoeff() >= -1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
        return raw;
      }
    } catch (const SolverError&) {
    }
    return std::nullopt;
  };
  z = attempt(b);
  if (!z) {
    VecX b_pert = b;
    const double eps = 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff());
    for (int i = 0; i < nv; ++i) b_pert[i] += eps * double(i + 1);
    z = attempt(b_pert);
  }
  GtImpulseResult out;
  if (!z) {
    return solve_pgs(state, llt, patch, mu, qdot1);
  }
  out.normal_lambda = z->head(k);
  out.complementarity = lcp_complementarity_residual(lcp, *z);
  out.impulse = N * z->head(k) + D * z->segment(k, k * nd);
  for (int i = 0; i < k; ++i) {
    double beta_sum = 0.0;
    for (int j = 0; j < nd; ++j) beta_sum += (*z)[k + i * nd + j];
    out.max_pyramid_violation =
        std::max(out.max_pyramid_violation, beta_sum - (*z)[i]);
  }
  return out;
}

}  // namespace patchsim
