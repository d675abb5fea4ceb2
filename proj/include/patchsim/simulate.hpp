#pragma once

#include <functional>
#include <string>
#include <vector>

#include "patchsim/augmented.hpp"
#include "patchsim/collision.hpp"
#include "patchsim/dynamics.hpp"
#include "patchsim/features.hpp"
#include "patchsim/ground_truth.hpp"

namespace patchsim {

enum class HandlerKind { kGroundTruth, kAugmented, kPdd };

const char* to_string(HandlerKind kind);
HandlerKind handler_from_string(const std::string& s);

/// Contact handler selection for a simulation run. Model pointers must
/// outlive the run and match the chosen kind.
struct HandlerConfig {
  HandlerKind kind = HandlerKind::kGroundTruth;
  const ContactModelSet* models = nullptr;
  const PddModelSet* pdd = nullptr;
  RegressorNoise noise;  // augmented only
};

/// One labeled contact event extracted from a trajectory.
struct ContactInstance {
  RigidBodyState state_before;
  Vec6 qdot1 = Vec6::Zero();
  ContactPatch patch;
  FeatureVector features = FeatureVector::Zero();
  ContactState label = ContactState::kDetach;
  Vec6 impulse = Vec6::Zero();  // recovered generalized impulse
  VecX friction_impulse;        // regressor target, 2-3 components
};

/// Per-step record of a simulated throw.
struct StepRecord {
  double time = 0.0;
  RigidBodyState state;  // at the start of the step
  Vec6 impulse = Vec6::Zero();
  bool in_contact = false;
  int patch_dim = -1;
  std::string patch_label;
  bool has_event = false;
  ContactState event = ContactState::kDetach;
};

/// Worst-case contact-property measurements accumulated over a run.
struct PropertyStats {
  double max_penetration = 0.0;        // below the plane, meters
  double max_complementarity = 0.0;    // LCP residual, scaled
  double max_detach_impulse = 0.0;     // handler impulse norm on detach steps
  double max_static_patch_speed = 0.0; // post-step, static branch
  double min_normal_velocity = 0.0;    // post-step at patch points
  int guard_activations = 0;
  int static_fallbacks = 0;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  double h = kDefaultTimeStep;
  RigidBodyState initial_state;
  RigidBodyState final_state;
  PropertyStats stats;
  int first_contact_step = -1;
  Vec6 first_contact_impulse = Vec6::Zero();
  std::vector<ContactInstance> instances;  // filled when collect_instances set
};

struct SimOptions {
  double h = kDefaultTimeStep;
  int steps = 800;
  double gravity_accel = kGravity;
  bool collect_instances = false;
  double deep_penetration_factor = 10.0;  // times eps_pen -> failure
};

/// Steps the body under gravity, invoking the configured handler whenever
/// the detector reports a patch. A frictionless anticipatory guard after the
/// handler keeps every vertex from crossing the ground within a step, so
/// penetration stays within the detection band for any handler. Throws
/// SimulationError on deep penetration or non-finite state.
Trajectory simulate_trajectory(const HandlerConfig& handler, const BodyModel& model,
                               const GroundPlane& ground, const RigidBodyState& init,
                               const SimOptions& options);

/// p = M (qdot_{t+1} - qdot_t) - h g, with g the generalized gravity force.
Vec6 recover_impulse(const Vec6& qdot_t, const Vec6& qdot_t1, const Mat6& M, double h,
                     const Vec6& gravity);

/// detach if |p| is below a fraction of the one-step gravity impulse, static
/// if every patch point is slower than delta_static under qdot_t1, else
/// dynamic.
ContactState label_contact_instance(const Vec6& impulse, const ContactPatch& patch,
                                    const RigidBodyState& state, const Vec6& qdot_t1,
                                    double h, double mass);

inline constexpr double kDetachFraction = 0.05;   // of m * h * g
inline constexpr double kStaticSpeedTol = 1e-3;   // m/s

/// Trajectory file: '#'-prefixed JSON metadata line, then one line per step:
/// time, position(3), quaternion(wxyz), velocity(6), impulse(6), contact
/// flag, dim, patch label, event label.
void save_trajectory(const Trajectory& traj, const std::string& path);

}  // namespace patchsim
