#include "patchsim/features.hpp"

namespace patchsim {

ContactState contact_state_from_string(const std::string& s) {
  if (s == "static") return ContactState::kStatic;
  if (s == "dynamic") return ContactState::kDynamic;
  if (s == "detach") return ContactState::kDetach;
  throw DataError("unknown contact state '" + s + "'");
}

FeatureVector encode_features(const RigidBodyState& state, const Vec6& qdot1,
                              const ContactPatch& patch) {
  if (patch.empty()) throw DataError("encode_features: empty patch");
  FeatureVector f;
  const Mat3 R = state.orientation.toRotationMatrix();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) f[3 * r + c] = R(r, c);
  }
  f.segment<6>(9) = qdot1;
  const Vec3 r_world = patch.centroid - state.position;
  f.segment<3>(15) = R.transpose() * r_world;
  f.segment<3>(18) = qdot1.head<3>().cross(r_world) + qdot1.tail<3>();
  return f;
}

}  // namespace patchsim
