#pragma once

#include <array>
#include <optional>
#include <string>

#include "patchsim/features.hpp"
#include "patchsim/friction.hpp"
#include "patchsim/lcp.hpp"
#include "patchsim/mlp.hpp"
#include "patchsim/rng.hpp"

namespace patchsim {

/// Trained classifier/regressor pair per patch dimensionality (0, 1, 2).
struct ContactModelSet {
  std::array<std::optional<MlpModel>, 3> classifier;
  std::array<std::optional<MlpModel>, 3> regressor;

  bool trained_for(int dim) const {
    return classifier[std::size_t(dim)].has_value() && regressor[std::size_t(dim)].has_value();
  }
};

void save_model_set(const ContactModelSet& set, const std::string& path);
ContactModelSet load_model_set(const std::string& path);

/// Argmax class of the softmax head; ties resolve to the lowest class index
/// (static < dynamic < detach).
ContactState predict_contact_state(const MlpModel& model, const FeatureVector& features);

/// De-normalized regressor output. Throws DataError when the model head does
/// not match the friction dof of `dim`.
VecX predict_friction_impulse(const MlpModel& model, const FeatureVector& features, int dim);

/// Optional perturbation of regressor outputs, used to probe the corrective
/// step: each component is scaled by (1 + u), u ~ U(-fraction, fraction).
struct RegressorNoise {
  double fraction = 0.0;
  Rng* rng = nullptr;
};

struct HandleResult {
  Vec6 impulse = Vec6::Zero();
  ContactState branch = ContactState::kDetach;
  bool static_fallback = false;       // dynamic LCP safety fallback fired
  VecX friction_coeffs;               // p_f as predicted (after noise)
  Vec3 normal_impulse = Vec3::Zero(); // (p_y, m~_x, m~_z)
  double lcp_complementarity = 0.0;
};

/// The data-augmented contact handler: classify, then either freeze the
/// patch (static), combine regressed friction with the frictionless normal
/// LCP (dynamic), or return zero impulse (detach).
HandleResult handle_contact(const RigidBodyState& state, const BodyModel& model,
                            const ContactPatch& patch, const AppliedForce& tau,
                            const ContactModelSet& models, double h,
                            const RegressorNoise& noise = {});

/// Purely data-driven baseline: one regressor per dimensionality mapping
/// features straight to the 6-vector impulse.
struct PddModelSet {
  std::array<std::optional<MlpModel>, 3> regressor;

  bool trained_for(int dim) const { return regressor[std::size_t(dim)].has_value(); }
};

void save_pdd_set(const PddModelSet& set, const std::string& path);
PddModelSet load_pdd_set(const std::string& path);

Vec6 pdd_impulse(const RigidBodyState& state, const BodyModel& model,
                 const ContactPatch& patch, const AppliedForce& tau,
                 const PddModelSet& models, double h);

}  // namespace patchsim
