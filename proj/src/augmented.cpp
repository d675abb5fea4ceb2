#include "patchsim/augmented.hpp"

#include <Eigen/Cholesky>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace patchsim {

namespace {

using nlohmann::json;

json optional_model_json(const std::optional<MlpModel>& m) {
  return m ? json::parse(mlp_to_json(*m)) : json(nullptr);
}

std::optional<MlpModel> optional_model_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return mlp_from_json(j.dump());
}

}  // namespace

void save_model_set(const ContactModelSet& set, const std::string& path) {
  json j;
  j["format"] = "patchsim-model-set";
  j["version"] = 1;
  for (int d = 0; d < 3; ++d) {
    j["classifier"].push_back(optional_model_json(set.classifier[std::size_t(d)]));
    j["regressor"].push_back(optional_model_json(set.regressor[std::size_t(d)]));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model set " + path);
  out << j.dump(1) << "\n";
}

ContactModelSet load_model_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model set " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "patchsim-model-set") {
    throw DataError("not a model set file: " + path);
  }
  ContactModelSet set;
  for (int d = 0; d < 3; ++d) {
    set.classifier[std::size_t(d)] = optional_model_from_json(j.at("classifier")[std::size_t(d)]);
    set.regressor[std::size_t(d)] = optional_model_from_json(j.at("regressor")[std::size_t(d)]);
  }
  return set;
}

ContactState predict_contact_state(const MlpModel& model, const FeatureVector& features) {
  const VecX probs = mlp_predict(model, features);
  int arg = 0;
  for (int k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[arg]) arg = k;
  }
  return static_cast<ContactState>(arg);
}

VecX predict_friction_impulse(const MlpModel& model, const FeatureVector& features, int dim) {
  if (model.head != OutputHead::kLinear || model.output_dim() != friction_dof(dim)) {
    throw DataError("predict_friction_impulse: model head does not match patch dimensionality");
  }
  return mlp_predict(model, features);
}

HandleResult handle_contact(const RigidBodyState& state, const BodyModel& model,
                            const ContactPatch& patch, const AppliedForce& tau,
                            const ContactModelSet& models, double h,
                            const RegressorNoise& noise) {
  if (patch.empty()) throw DataError("handle_contact: empty patch");
  const int dim = patch.dimensionality;
  if (!models.trained_for(dim)) {
    throw DataError("handle_contact: no trained models for patch dimensionality " +
                    std::to_string(dim));
  }
  const Mat6 M = mass_matrix(state, model);
  const Eigen::LLT<Mat6> llt(M);
  const Vec6 qdot1 = state.gen_velocity + h * llt.solve(tau.gen_force);
  const FeatureVector features = encode_features(state, qdot1, patch);

  HandleResult out;
  out.branch = predict_contact_state(*models.classifier[std::size_t(dim)], features);

  switch (out.branch) {
    case ContactState::kStatic: {
      const ConstraintSolveResult res = static_constraint_impulse(state, model, patch, qdot1);
      out.impulse = res.impulse;
      break;
    }
    case ContactState::kDynamic: {
      VecX p_f = predict_friction_impulse(*models.regressor[std::size_t(dim)], features, dim);
      if (noise.fraction > 0.0 && noise.rng != nullptr) {
        for (int i = 0; i < p_f.size(); ++i) {
          p_f[i] *= 1.0 + uniform(*noise.rng, -noise.fraction, noise.fraction);
        }
      }
      out.friction_coeffs = p_f;
      const FrictionBasis basis = friction_basis(state, patch);
      const Vec6 friction_gen = basis.T_f * p_f;
      const Vec6 qdot2 = qdot1 + llt.solve(friction_gen);
      const NormalImpulseResult normal =
          frictionless_normal_impulse(state, model, patch, qdot2);
      out.normal_impulse = normal.p_n;
      out.lcp_complementarity = normal.complementarity;
      out.impulse = normal.generalized + friction_gen;

      // Safety net: a degenerate LCP answer that leaves approaching points
      // unresolved falls back to the static freeze, which always satisfies
      // the contact constraints.
      if (normal.lambda.cwiseAbs().maxCoeff() == 0.0) {
        const Vec6 qdot_post = qdot1 + llt.solve(out.impulse);
        double min_vn = 0.0;
        for (const auto& pt : patch.points_world) {
          min_vn = std::min(min_vn,
                            (point_jacobian(state, pt) * qdot_post).dot(patch.normal));
        }
        if (min_vn < -1e-8) {
          const ConstraintSolveResult res =
              static_constraint_impulse(state, model, patch, qdot1);
          out.impulse = res.impulse;
          out.static_fallback = true;
        }
      }
      break;
    }
    case ContactState::kDetach:
      out.impulse.setZero();
      break;
  }
  return out;
}

void save_pdd_set(const PddModelSet& set, const std::string& path) {
  json j;
  j["format"] = "patchsim-pdd-set";
  j["version"] = 1;
  for (int d = 0; d < 3; ++d) {
    j["regressor"].push_back(optional_model_json(set.regressor[std::size_t(d)]));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model set " + path);
  out << j.dump(1) << "\n";
}

PddModelSet load_pdd_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model set " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "patchsim-pdd-set") {
    throw DataError("not a PDD model set file: " + path);
  }
  PddModelSet set;
  for (int d = 0; d < 3; ++d) {
    set.regressor[std::size_t(d)] = optional_model_from_json(j.at("regressor")[std::size_t(d)]);
  }
  return set;
}

Vec6 pdd_impulse(const RigidBodyState& state, const BodyModel& model,
                 const ContactPatch& patch, const AppliedForce& tau,
                 const PddModelSet& models, double h) {
  if (patch.empty()) throw DataError("pdd_impulse: empty patch");
  const int dim = patch.dimensionality;
  if (!models.trained_for(dim)) {
    throw DataError("pdd_impulse: no trained model for patch dimensionality " +
                    std::to_string(dim));
  }
  const Mat6 M = mass_matrix(state, model);
  const Vec6 qdot1 = state.gen_velocity + h * M.llt().solve(tau.gen_force);
  const FeatureVector features = encode_features(state, qdot1, patch);
  const MlpModel& reg = *models.regressor[std::size_t(dim)];
  if (reg.head != OutputHead::kLinear || reg.output_dim() != 6) {
    throw DataError("pdd_impulse: model does not predict a 6-vector impulse");
  }
  return mlp_predict(reg, features);
}

}  // namespace patchsim
