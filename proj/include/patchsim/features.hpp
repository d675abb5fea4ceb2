#pragma once

#include "patchsim/collision.hpp"
#include "patchsim/dynamics.hpp"
#include "patchsim/types.hpp"

namespace patchsim {

/// Contact state vocabulary. Order matters: prediction tie-breaks resolve to
/// the lowest index.
enum class ContactState : int { kStatic = 0, kDynamic = 1, kDetach = 2 };

inline const char* to_string(ContactState s) {
  switch (s) {
    case ContactState::kStatic: return "static";
    case ContactState::kDynamic: return "dynamic";
    case ContactState::kDetach: return "detach";
  }
  return "?";
}

ContactState contact_state_from_string(const std::string& s);

inline constexpr int kFeatureDim = 21;

/// Learned-model input: rotation matrix (9, row-major), generalized velocity
/// after applied-force integration (6), patch centroid in the body frame (3),
/// and the world velocity of the centroid point (3).
using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;

FeatureVector encode_features(const RigidBodyState& state, const Vec6& qdot1,
                              const ContactPatch& patch);

}  // namespace patchsim
