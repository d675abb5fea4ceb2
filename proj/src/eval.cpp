#include "patchsim/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace patchsim {

double orientation_error(const Quat& a, const Quat& b) {
  const Quat rel = a.conjugate() * b;
  return quat_angle(rel.normalized());
}

namespace {

Vec2 horizontal(const Vec3& p) { return Vec2(p.x(), p.z()); }

}  // namespace

MetricsReport run_single_body_experiment(const BodyModel& model, const GroundPlane& ground,
                                         const HandlerConfig& handler,
                                         const ThrowConfig& throws, int trials) {
  if (trials <= 0) throw DataError("run_single_body_experiment: trial count must be > 0");
  MetricsReport report;
  report.n_trials = trials;
  SimOptions options;
  options.h = throws.h;
  options.steps = throws.steps;
  HandlerConfig gt;
  gt.kind = HandlerKind::kGroundTruth;

  double sum_dist = 0.0, sum_orient = 0.0, sum_impulse = 0.0;
  int n_impulse = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(throws.seed, std::uint64_t(trial)));
    const RigidBodyState init = sample_initial_state(throws, *model.shape, ground, rng);
    TrialMetrics tm;
    tm.trial = trial;
    try {
      const Trajectory traj_gt = simulate_trajectory(gt, model, ground, init, options);
      const Trajectory traj_test = simulate_trajectory(handler, model, ground, init, options);
      tm.completed = true;
      tm.gt_distance = (horizontal(traj_gt.final_state.position) -
                        horizontal(traj_gt.initial_state.position))
                           .norm();
      tm.distance_error = (horizontal(traj_gt.final_state.position) -
                           horizontal(traj_test.final_state.position))
                              .norm();
      tm.orientation_error = orientation_error(traj_gt.final_state.orientation,
                                               traj_test.final_state.orientation);
      tm.impulse_comparable = traj_gt.first_contact_step >= 0 &&
                              traj_gt.first_contact_step == traj_test.first_contact_step;
      if (tm.impulse_comparable) {
        tm.impulse_error =
            (traj_gt.first_contact_impulse - traj_test.first_contact_impulse).norm();
      }
    } catch (const SimulationError&) {
      tm.completed = false;
    }
    if (tm.completed) {
      ++report.n_completed;
      sum_dist += tm.distance_error;
      sum_orient += tm.orientation_error;
      if (tm.impulse_comparable) {
        sum_impulse += tm.impulse_error;
        ++n_impulse;
      } else {
        ++report.n_impulse_excluded;
      }
    }
    report.trials.push_back(tm);
  }
  if (report.n_completed > 0) {
    report.mean_distance_error = sum_dist / report.n_completed;
    report.mean_orientation_error = sum_orient / report.n_completed;
  }
  if (n_impulse > 0) report.mean_impulse_error = sum_impulse / n_impulse;
  return report;
}

std::vector<std::string> contact_event_tokens(const Trajectory& traj) {
  std::vector<std::string> tokens;
  for (const auto& step : traj.steps) {
    if (!step.in_contact || step.patch_label.empty()) continue;
    if (tokens.empty() || tokens.back() != step.patch_label) {
      tokens.push_back(step.patch_label);
    }
  }
  return tokens;
}

std::string contact_event_sequence(const Trajectory& traj) {
  const auto tokens = contact_event_tokens(traj);
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += "-";
    out += t;
  }
  return out;
}

double sequence_similarity(const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 && m == 0) return 1.0;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  const double dist = double(prev[m]);
  return 1.0 - dist / double(std::max(n, m));
}

std::vector<AnisoDirectionResult> run_anisotropic_experiment(
    const BodyModel& model, const GroundPlane& ground, const HandlerConfig& handler,
    const AnisoConfig& cfg) {
  std::vector<AnisoDirectionResult> results;
  SimOptions options;
  options.h = cfg.h;
  options.steps = cfg.steps;
  HandlerConfig gt;
  gt.kind = HandlerKind::kGroundTruth;

  for (int k = 0; k < 8; ++k) {
    AnisoDirectionResult r;
    r.angle_deg = 45.0 * k;
    const double ang = r.angle_deg * M_PI / 180.0;
    r.direction = Vec3(std::cos(ang), 0.0, std::sin(ang));

    RigidBodyState init;
    init.orientation = Quat(Eigen::AngleAxisd(ang, Vec3::UnitY()));
    const Mat3 R = init.orientation.toRotationMatrix();
    double lowest = 0.0;
    for (const auto& v : model.shape->vertices) lowest = std::min(lowest, (R * v).y());
    init.position = Vec3(0.0, ground.height + cfg.launch_height - lowest, 0.0);
    init.gen_velocity.tail<3>() = cfg.launch_speed * r.direction;

    try {
      const Trajectory tg = simulate_trajectory(gt, model, ground, init, options);
      const Trajectory tt = simulate_trajectory(handler, model, ground, init, options);
      r.gt_distance =
          (horizontal(tg.final_state.position) - horizontal(tg.initial_state.position)).norm();
      r.test_distance =
          (horizontal(tt.final_state.position) - horizontal(tt.initial_state.position)).norm();
      r.completed = true;
    } catch (const SimulationError&) {
      r.completed = false;
    }
    results.push_back(r);
  }
  return results;
}

ArticulatedDemoResult run_articulated_demo(const HandlerConfig& handler,
                                           const ConvexShape* box_shape,
                                           const GroundPlane& ground, int steps, double h) {
  ArticulatedDemoResult out;
  ArticulatedSystem sys = make_three_link_demo(box_shape);
  std::vector<int> contact_evals;
  for (int step = 0; step < steps; ++step) {
    try {
      const ArticulatedStepReport rep = step_articulated(sys, handler, ground, h);
      out.max_anchor_drift = std::max(out.max_anchor_drift, rep.anchor_drift_before_projection);
      if (rep.in_contact) {
        ++out.contact_steps;
        if (rep.root.converged) ++out.converged_contact_steps;
        contact_evals.push_back(rep.root.g_evaluations);
        out.max_g_evaluations = std::max(out.max_g_evaluations, rep.root.g_evaluations);
        out.total_class_flips += rep.root.class_flips;
      }
      out.steps.push_back(rep);
    } catch (const SimulationError&) {
      out.failed = true;
      break;
    }
  }
  if (!contact_evals.empty()) {
    std::sort(contact_evals.begin(), contact_evals.end());
    const std::size_t mid = contact_evals.size() / 2;
    out.median_g_evaluations =
        contact_evals.size() % 2 == 1
            ? double(contact_evals[mid])
            : 0.5 * (contact_evals[mid - 1] + contact_evals[mid]);
  }
  out.final_system = sys;
  return out;
}

void save_metrics_report(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics report " + path);
  nlohmann::json meta;
  meta["format"] = "patchsim-metrics";
  meta["version"] = 1;
  meta["n_trials"] = report.n_trials;
  meta["n_completed"] = report.n_completed;
  meta["n_impulse_excluded"] = report.n_impulse_excluded;
  meta["mean_distance_error"] = report.mean_distance_error;
  meta["mean_orientation_error"] = report.mean_orientation_error;
  meta["mean_impulse_error"] = report.mean_impulse_error;
  out << "# " << meta.dump() << "\n";
  char buf[256];
  for (const auto& t : report.trials) {
    std::snprintf(buf, sizeof buf, "%d %d %d %.17g %.17g %.17g %.17g\n", t.trial,
                  t.completed ? 1 : 0, t.impulse_comparable ? 1 : 0, t.distance_error,
                  t.orientation_error, t.impulse_error, t.gt_distance);
    out << buf;
  }
}

std::string format_metrics_table(const MetricsReport& report) {
  std::ostringstream ss;
  char buf[256];
  ss << "trials completed " << report.n_completed << "/" << report.n_trials
     << ", impulse-excluded " << report.n_impulse_excluded << "\n";
  std::snprintf(buf, sizeof buf, "%-28s %12.6f m\n", "mean distance error",
                report.mean_distance_error);
  ss << buf;
  std::snprintf(buf, sizeof buf, "%-28s %12.6f rad\n", "mean orientation error",
                report.mean_orientation_error);
  ss << buf;
  std::snprintf(buf, sizeof buf, "%-28s %12.6f N s\n", "mean first-impulse error",
                report.mean_impulse_error);
  ss << buf;
  return ss.str();
}

}  // namespace patchsim
