#pragma once

#include <string>
#include <vector>

#include "patchsim/articulated.hpp"
#include "patchsim/dataset.hpp"
#include "patchsim/simulate.hpp"

namespace patchsim {

/// Per-trial comparison of one handler against the ground truth simulator
/// started from the same initial state.
struct TrialMetrics {
  int trial = 0;
  bool completed = false;           // both simulations finished
  bool impulse_comparable = false;  // first contact at the same step
  double distance_error = 0.0;      // m, horizontal final-position gap
  double orientation_error = 0.0;   // rad, geodesic
  double impulse_error = 0.0;       // N s, 6-vector norm at first contact
  double gt_distance = 0.0;         // m, GT horizontal travel
};

struct MetricsReport {
  double mean_distance_error = 0.0;
  double mean_orientation_error = 0.0;
  double mean_impulse_error = 0.0;
  int n_trials = 0;
  int n_completed = 0;
  int n_impulse_excluded = 0;  // completed trials with mismatched first contact
  std::vector<TrialMetrics> trials;
};

/// Geodesic rotation distance in [0, pi].
double orientation_error(const Quat& a, const Quat& b);

/// Simulates `trials` paired throws (GT vs the configured handler) from
/// identical initial states and aggregates the three trajectory metrics.
/// Failed trials are excluded from the means and counted.
MetricsReport run_single_body_experiment(const BodyModel& model, const GroundPlane& ground,
                                         const HandlerConfig& handler,
                                         const ThrowConfig& throws, int trials);

/// Run-length-collapsed patch feature labels of the contact steps.
std::vector<std::string> contact_event_tokens(const Trajectory& traj);

/// Tokens joined with '-'; empty string for a contact-free trajectory.
std::string contact_event_sequence(const Trajectory& traj);

/// 1 - levenshtein(a, b) / max(|a|, |b|); 1 when both are empty.
double sequence_similarity(const std::vector<std::string>& a,
                           const std::vector<std::string>& b);

struct AnisoDirectionResult {
  double angle_deg = 0.0;
  Vec3 direction = Vec3::UnitX();
  double gt_distance = 0.0;
  double test_distance = 0.0;
  bool completed = false;
};

struct AnisoConfig {
  double launch_height = 0.3;  // clearance of the lowest vertex, m
  double launch_speed = 1.5;   // m/s, horizontal
  int steps = 800;
  double h = kDefaultTimeStep;
};

/// Throws the box in eight compass directions with the initial orientation
/// and velocity aligned to each direction; reports the final horizontal
/// travel of GT and of the configured handler.
std::vector<AnisoDirectionResult> run_anisotropic_experiment(
    const BodyModel& model, const GroundPlane& ground, const HandlerConfig& handler,
    const AnisoConfig& cfg);

struct ArticulatedDemoResult {
  std::vector<ArticulatedStepReport> steps;
  ArticulatedSystem final_system;
  int contact_steps = 0;
  int converged_contact_steps = 0;
  double median_g_evaluations = 0.0;
  int max_g_evaluations = 0;
  int total_class_flips = 0;
  double max_anchor_drift = 0.0;
  bool failed = false;
};

/// Swings the three-link demo chain from horizontal for `steps` steps with
/// the given handler and aggregates the root-solve statistics.
ArticulatedDemoResult run_articulated_demo(const HandlerConfig& handler,
                                           const ConvexShape* box_shape,
                                           const GroundPlane& ground, int steps, double h);

/// Machine-readable report: '#' + JSON metadata, then one line per trial.
void save_metrics_report(const MetricsReport& report, const std::string& path);
std::string format_metrics_table(const MetricsReport& report);

}  // namespace patchsim
