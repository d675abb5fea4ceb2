#include <doctest.h>

#include "oracles.hpp"
#include "patchsim/augmented.hpp"
#include "patchsim/shape.hpp"

using namespace patchsim;

namespace {

// Classifier that always answers one class: zero weights, biased logits.
MlpModel constant_classifier(ContactState cls) {
  MlpModel m = make_mlp({kFeatureDim, 3}, OutputHead::kSoftmax);
  m.biases[0][int(cls)] = 10.0;
  return m;
}

// Regressor that always predicts a fixed friction impulse via out_mean.
MlpModel constant_regressor(const VecX& value) {
  MlpModel m = make_mlp({kFeatureDim, int(value.size())}, OutputHead::kLinear);
  m.out_mean = value;
  return m;
}

struct Rig {
  ConvexShape shape = make_box();
  BodyModel model;
  GroundPlane ground;
  double h = 0.002;

  Rig() {
    model.mass = shape.mass;
    model.inertia_body = shape.inertia_body;
    model.shape = &shape;
  }

  RigidBodyState resting() const {
    RigidBodyState s;
    double lowest = 0.0;
    for (const auto& v : shape.vertices) lowest = std::min(lowest, v.y());
    s.position = Vec3(0, -lowest, 0);
    return s;
  }

  ContactModelSet models_answering(ContactState cls, const VecX& friction) const {
    ContactModelSet set;
    for (int d = 0; d < 3; ++d) {
      set.classifier[std::size_t(d)] = constant_classifier(cls);
      VecX f = friction;
      f.conservativeResize(friction_dof(d));
      set.regressor[std::size_t(d)] = constant_regressor(f);
    }
    return set;
  }
};

}  // namespace

TEST_CASE("feature encoding of the trivial configurations") {
  Rig rig;
  RigidBodyState state;  // identity orientation, zero velocity, COM at origin
  ContactPatch patch;
  patch.points_world = {Vec3::Zero()};
  patch.vertex_indices = {0};
  patch.centroid = Vec3::Zero();
  patch.dimensionality = 0;
  const FeatureVector f = encode_features(state, Vec6::Zero(), patch);
  Mat3 R;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R(r, c) = f[3 * r + c];
  CHECK((R - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.segment<6>(9).norm() == 0.0);
  CHECK(f.segment<3>(15).norm() == 0.0);
  CHECK(f.segment<3>(18).norm() == 0.0);
}

TEST_CASE("feature encoding of sliding and spinning bodies") {
  RigidBodyState state;
  state.position = Vec3(0, 0.1, 0);
  ContactPatch patch;
  patch.centroid = Vec3(0, 0, 0);  // directly under the COM
  patch.points_world = {patch.centroid};
  patch.vertex_indices = {0};
  patch.dimensionality = 0;

  Vec6 sliding = Vec6::Zero();
  sliding.tail<3>() = Vec3(1, 0, 0);
  FeatureVector f = encode_features(state, sliding, patch);
  CHECK((f.segment<3>(18) - Vec3(1, 0, 0)).norm() < 1e-15);

  // Spin about y with an offset centroid: velocity = w x r.
  RigidBodyState st2;
  ContactPatch p2;
  p2.centroid = Vec3(0.5, -0.5, 0.0);
  p2.points_world = {p2.centroid};
  p2.vertex_indices = {0};
  p2.dimensionality = 0;
  Vec6 spin = Vec6::Zero();
  spin.head<3>() = Vec3(0, 1, 0);
  f = encode_features(st2, spin, p2);
  const Vec3 expect = Vec3(0, 1, 0).cross(p2.centroid);
  CHECK((f.segment<3>(18) - expect).norm() < 1e-15);

  // Body-frame centroid uses the orientation.
  RigidBodyState st3;
  st3.orientation = Quat(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitY()));
  f = encode_features(st3, Vec6::Zero(), p2);
  const Vec3 body = st3.orientation.toRotationMatrix().transpose() * p2.centroid;
  CHECK((f.segment<3>(15) - body).norm() < 1e-12);
}

TEST_CASE("tie-breaking picks the lowest class index") {
  const MlpModel uniform = make_mlp({kFeatureDim, 3}, OutputHead::kSoftmax);
  CHECK(predict_contact_state(uniform, FeatureVector::Zero()) == ContactState::kStatic);
}

TEST_CASE("predict_friction_impulse rejects mismatched heads") {
  const MlpModel reg3 = constant_regressor(VecX::Zero(3));
  CHECK_THROWS_AS(predict_friction_impulse(reg3, FeatureVector::Zero(), 0), DataError);
  CHECK_NOTHROW(predict_friction_impulse(reg3, FeatureVector::Zero(), 2));
  const MlpModel cls = constant_classifier(ContactState::kStatic);
  CHECK_THROWS_AS(predict_friction_impulse(cls, FeatureVector::Zero(), 2), DataError);
}

TEST_CASE("zero-weight regressor predicts the stored target mean") {
  VecX mean(3);
  mean << 0.4, -0.2, 0.05;
  const MlpModel reg = constant_regressor(mean);
  const VecX out = predict_friction_impulse(reg, FeatureVector::Zero(), 2);
  CHECK((out - mean).norm() == 0.0);
}

TEST_CASE("detach branch returns exactly zero impulse") {
  Rig rig;
  RigidBodyState state = rig.resting();
  state.gen_velocity.tail<3>() = Vec3(0, 1.0, 0);
  const auto patch = detect_patch(state, rig.shape, rig.ground);
  REQUIRE(patch.has_value());
  const ContactModelSet models = rig.models_answering(ContactState::kDetach, VecX::Zero(3));
  const HandleResult res = handle_contact(state, rig.model, *patch,
                                          gravity_force(rig.model), models, rig.h);
  CHECK(res.branch == ContactState::kDetach);
  CHECK(res.impulse.norm() == 0.0);
}

TEST_CASE("static branch freezes the resting box") {
  Rig rig;
  RigidBodyState state = rig.resting();
  const auto patch = detect_patch(state, rig.shape, rig.ground);
  REQUIRE(patch.has_value());
  const ContactModelSet models = rig.models_answering(ContactState::kStatic, VecX::Zero(3));
  const HandleResult res = handle_contact(state, rig.model, *patch,
                                          gravity_force(rig.model), models, rig.h);
  const Mat6 M = mass_matrix(state, rig.model);
  const Vec6 post =
      integrate_velocity(state, M, rig.h, gravity_force(rig.model), res.impulse);
  CHECK((static_constraint_jacobian(state, *patch) * post).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("dynamic branch corrects arbitrary regressor output") {
  Rig rig;
  Rng rng(113);
  RigidBodyState state = rig.resting();
  state.gen_velocity.tail<3>() = Vec3(1.0, -0.8, 0.2);
  state.gen_velocity.head<3>() = Vec3(0.3, -0.5, 1.0);
  const auto patch = detect_patch(state, rig.shape, rig.ground);
  REQUIRE(patch.has_value());
  const Mat6 M = mass_matrix(state, rig.model);

  for (int trial = 0; trial < 20; ++trial) {
    VecX pf(3);
    for (int i = 0; i < 3; ++i) pf[i] = 0.05 * normal(rng);
    const ContactModelSet models = rig.models_answering(ContactState::kDynamic, pf);
    const HandleResult res = handle_contact(state, rig.model, *patch,
                                            gravity_force(rig.model), models, rig.h);
    CHECK(res.branch == ContactState::kDynamic);
    // Regardless of the regressed friction, the normal LCP keeps every patch
    // point from approaching.
    const Vec6 post =
        integrate_velocity(state, M, rig.h, gravity_force(rig.model), res.impulse);
    for (const auto& pt : patch->points_world) {
      CHECK((point_jacobian(state, pt) * post).y() >= -1e-8);
    }
    CHECK(res.impulse.allFinite());
    // The assembled impulse splits as T_n p_n + T_f p_f.
    const FrictionBasis basis = friction_basis(state, *patch);
    const Vec6 rebuilt = normal_basis() * res.normal_impulse + basis.T_f * res.friction_coeffs;
    CHECK((rebuilt - res.impulse).norm() < 1e-10 * std::max(1.0, res.impulse.norm()));
  }
}

TEST_CASE("handler needs trained models for the patch dimensionality") {
  Rig rig;
  const RigidBodyState state = rig.resting();
  const auto patch = detect_patch(state, rig.shape, rig.ground);
  REQUIRE(patch.has_value());
  ContactModelSet empty;
  CHECK_THROWS_AS(handle_contact(state, rig.model, *patch, gravity_force(rig.model),
                                 empty, rig.h),
                  DataError);
}

TEST_CASE("model set file round trip") {
  Rig rig;
  const ContactModelSet set = rig.models_answering(ContactState::kStatic, VecX::Ones(3));
  const std::string path = "/tmp/patchsim_test_models.json";
  save_model_set(set, path);
  const ContactModelSet loaded = load_model_set(path);
  for (int d = 0; d < 3; ++d) {
    REQUIRE(loaded.trained_for(d));
    CHECK(loaded.regressor[std::size_t(d)]->output_dim() == friction_dof(d));
  }
  std::remove(path.c_str());
}

TEST_CASE("pdd predicts the 6-vector impulse directly") {
  Rig rig;
  const RigidBodyState state = rig.resting();
  const auto patch = detect_patch(state, rig.shape, rig.ground);
  REQUIRE(patch.has_value());
  PddModelSet set;
  VecX target(6);
  target << 0.1, 0.0, -0.05, 0.02, 0.3, 0.0;
  for (int d = 0; d < 3; ++d) {
    MlpModel m = make_mlp({kFeatureDim, 6}, OutputHead::kLinear);
    m.out_mean = target;
    set.regressor[std::size_t(d)] = m;
  }
  const Vec6 p = pdd_impulse(state, rig.model, *patch, gravity_force(rig.model), set, rig.h);
  CHECK((p - Vec6(target)).norm() == 0.0);

  const std::string path = "/tmp/patchsim_test_pdd.json";
  save_pdd_set(set, path);
  const PddModelSet loaded = load_pdd_set(path);
  CHECK(loaded.trained_for(1));
  std::remove(path.c_str());
}
