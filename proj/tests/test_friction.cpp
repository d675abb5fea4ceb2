#include <doctest.h>

#include "oracles.hpp"
#include "patchsim/friction.hpp"
#include "patchsim/rng.hpp"
#include "patchsim/shape.hpp"

using namespace patchsim;

namespace {

ContactPatch patch_with_centroid(const Vec3& centroid, int dim) {
  ContactPatch p;
  p.centroid = centroid;
  p.points_world = {centroid};
  p.vertex_indices = {0};
  p.dimensionality = dim;
  return p;
}

}  // namespace

TEST_CASE("friction basis columns from the cross-product rule") {
  RigidBodyState state;
  state.position = Vec3(0, 0.5, 0);
  const double d = 0.5;
  const ContactPatch patch = patch_with_centroid(Vec3(0, 0, 0), 2);
  const FrictionBasis basis = friction_basis(state, patch);
  REQUIRE(basis.dof() == 3);

  // r = centroid - COM = (0, -d, 0); r x e_x = (0, 0, d).
  const Vec3 r(0, -d, 0);
  CHECK((basis.T_f.col(0).head<3>() - oracle::Vec3(r.cross(Vec3::UnitX()))).norm() < 1e-15);
  CHECK((basis.T_f.col(0).head<3>() - Vec3(0, 0, d)).norm() < 1e-15);
  CHECK((basis.T_f.col(0).tail<3>() - Vec3::UnitX()).norm() == 0.0);
  CHECK((basis.T_f.col(1).head<3>() - Vec3(-d, 0, 0)).norm() < 1e-15);
  CHECK((basis.T_f.col(1).tail<3>() - Vec3::UnitZ()).norm() == 0.0);
}

TEST_CASE("friction basis at the COM has pure-force columns") {
  RigidBodyState state;
  state.position = Vec3(0.2, 0.0, -0.1);
  const ContactPatch patch = patch_with_centroid(state.position, 2);
  const FrictionBasis basis = friction_basis(state, patch);
  CHECK(basis.T_f.col(0).head<3>().norm() == 0.0);
  CHECK(basis.T_f.col(1).head<3>().norm() == 0.0);
}

TEST_CASE("torsional column is always a pure normal torque") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    RigidBodyState state;
    state.position = Vec3(normal(rng), normal(rng), normal(rng));
    const ContactPatch patch =
        patch_with_centroid(Vec3(normal(rng), normal(rng), normal(rng)), 1 + int(uniform_below(rng, 2)));
    const FrictionBasis basis = friction_basis(state, patch);
    REQUIRE(basis.dof() == 3);
    Vec6 expected;
    expected << 0, 1, 0, 0, 0, 0;
    CHECK((basis.T_f.col(2) - expected).norm() == 0.0);
  }
}

TEST_CASE("0D patches drop the torsional column") {
  RigidBodyState state;
  const ContactPatch patch = patch_with_centroid(Vec3(0.1, 0, 0.1), 0);
  CHECK(friction_basis(state, patch).dof() == 2);
  CHECK(friction_dof(0) == 2);
  CHECK(friction_dof(1) == 3);
  CHECK(friction_dof(2) == 3);
}

TEST_CASE("projection recovers exact basis coefficients") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    RigidBodyState state;
    state.position = Vec3(normal(rng), uniform(rng, 0.2, 1.0), normal(rng));
    const ContactPatch patch =
        patch_with_centroid(state.position + Vec3(normal(rng) * 0.1, -0.2, normal(rng) * 0.1), 2);
    const FrictionBasis basis = friction_basis(state, patch);
    VecX c(3);
    c << 1.0, 2.0, 3.0;
    const Vec6 p = basis.T_f * c;
    const VecX rec = project_friction_target(p, basis);
    CHECK((rec - c).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("pure normal impulse projects to zero friction") {
  RigidBodyState state;
  state.position = Vec3(0, 0.4, 0);
  const ContactPatch patch = patch_with_centroid(Vec3(0.05, 0, -0.03), 2);
  const FrictionBasis basis = friction_basis(state, patch);
  Vec6 p = Vec6::Zero();
  p[4] = 2.0;   // p_y
  p[0] = 0.3;   // m~_x
  p[2] = -0.1;  // m~_z
  const VecX c = project_friction_target(p, basis);
  CHECK(c.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("projection residual is orthogonal to the reduced basis") {
  Rng rng(29);
  const Eigen::Matrix<double, 6, 3> Tn = normal_basis();
  const Mat6 P = Mat6::Identity() - Tn * Tn.transpose();
  for (int trial = 0; trial < 20; ++trial) {
    RigidBodyState state;
    state.position = Vec3(normal(rng), uniform(rng, 0.2, 1.0), normal(rng));
    const int dim = int(uniform_below(rng, 3));
    const ContactPatch patch = patch_with_centroid(
        state.position + Vec3(normal(rng) * 0.1, -uniform(rng, 0.1, 0.5), normal(rng) * 0.1), dim);
    const FrictionBasis basis = friction_basis(state, patch);
    Vec6 p;
    for (int i = 0; i < 6; ++i) p[i] = normal(rng);
    const VecX c = project_friction_target(p, basis);
    // Normal equations of the projected least squares.
    const MatX Tf_t = P * basis.T_f;
    const VecX grad = Tf_t.transpose() * (Tf_t * c - P * p);
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("normal basis maps (p_y, m_x, m_z) into generalized coordinates") {
  const Eigen::Matrix<double, 6, 3> Tn = normal_basis();
  const Vec3 pn(2.0, -0.5, 0.25);
  const Vec6 g = Tn * pn;
  CHECK(g[4] == 2.0);
  CHECK(g[0] == -0.5);
  CHECK(g[2] == 0.25);
  CHECK(std::abs(g[1]) + std::abs(g[3]) + std::abs(g[5]) == 0.0);
}
