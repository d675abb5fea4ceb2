#include "patchsim/simulate.hpp"

#include <Eigen/Cholesky>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "patchsim/friction.hpp"

namespace patchsim {

const char* to_string(HandlerKind kind) {
  switch (kind) {
    case HandlerKind::kGroundTruth: return "gt";
    case HandlerKind::kAugmented: return "augmented";
    case HandlerKind::kPdd: return "pdd";
  }
  return "?";
}

HandlerKind handler_from_string(const std::string& s) {
  if (s == "gt") return HandlerKind::kGroundTruth;
  if (s == "augmented") return HandlerKind::kAugmented;
  if (s == "pdd") return HandlerKind::kPdd;
  throw DataError("unknown handler '" + s + "'");
}

Vec6 recover_impulse(const Vec6& qdot_t, const Vec6& qdot_t1, const Mat6& M, double h,
                     const Vec6& gravity) {
  return M * (qdot_t1 - qdot_t) - h * gravity;
}

ContactState label_contact_instance(const Vec6& impulse, const ContactPatch& patch,
                                    const RigidBodyState& state, const Vec6& qdot_t1,
                                    double h, double mass) {
  if (impulse.norm() < kDetachFraction * mass * h * kGravity) {
    return ContactState::kDetach;
  }
  double max_speed = 0.0;
  for (const auto& pt : patch.points_world) {
    max_speed = std::max(max_speed, (point_jacobian(state, pt) * qdot_t1).norm());
  }
  return max_speed < kStaticSpeedTol ? ContactState::kStatic : ContactState::kDynamic;
}

namespace {

// Frictionless anticipatory guard: adds the impulse that keeps every vertex
// from ending the step below the plane (or below its current depth, for
// vertices already parked marginally under it). End-of-step heights come
// from the exact position update, so fast spins do not defeat the bound the
// way a linear extrapolation would.
Vec6 touchdown_guard(const RigidBodyState& state, const Eigen::LLT<Mat6>& llt,
                     const ConvexShape& shape, const GroundPlane& ground, double h,
                     Vec6& qdot, bool& fired) {
  Vec6 total = Vec6::Zero();
  const Mat3 R = state.orientation.toRotationMatrix();
  fired = false;
  for (int round = 0; round < 6; ++round) {
    const RigidBodyState next = integrate_position(state, qdot, h);
    const Mat3 Rn = next.orientation.toRotationMatrix();
    std::vector<Vec3> pts;
    std::vector<double> b_vals;
    for (const auto& v : shape.vertices) {
      const Vec3 p = state.position + R * v;
      const double gap = p.y() - ground.height;
      const double gap_next = (next.position + Rn * v).y() - ground.height;
      const double target = std::min(0.0, gap);
      if (gap_next < target - 1e-9) {
        pts.push_back(p);
        b_vals.push_back((gap_next - target) / h);
      }
    }
    if (pts.empty()) break;
    fired = true;
    const int k = int(pts.size());
    MatX Jn(k, 6);
    VecX b(k);
    for (int i = 0; i < k; ++i) {
      Jn.row(i) = GroundPlane::normal().transpose() * point_jacobian(state, pts[std::size_t(i)]);
      b[i] = b_vals[std::size_t(i)];
    }
    LcpProblem lcp;
    lcp.A = Jn * llt.solve(Jn.transpose());
    lcp.b = b;
    const VecX lambda = solve_lcp_dantzig(lcp);
    const Vec6 imp = Jn.transpose() * lambda;
    qdot += llt.solve(imp);
    total += imp;
  }
  return total;
}

double min_vertex_height(const RigidBodyState& state, const ConvexShape& shape,
                         const GroundPlane& ground) {
  const Mat3 R = state.orientation.toRotationMatrix();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& v : shape.vertices) {
    lo = std::min(lo, (state.position + R * v).y() - ground.height);
  }
  return lo;
}

}  // namespace

Trajectory simulate_trajectory(const HandlerConfig& handler, const BodyModel& model,
                               const GroundPlane& ground, const RigidBodyState& init,
                               const SimOptions& options) {
  if (model.shape == nullptr) throw DataError("simulate_trajectory: model has no shape");
  if (handler.kind == HandlerKind::kAugmented && handler.models == nullptr) {
    throw DataError("simulate_trajectory: augmented handler needs models");
  }
  if (handler.kind == HandlerKind::kPdd && handler.pdd == nullptr) {
    throw DataError("simulate_trajectory: pdd handler needs models");
  }
  const ConvexShape& shape = *model.shape;
  const AppliedForce gravity = gravity_force(model, options.gravity_accel);
  const double h = options.h;

  Trajectory traj;
  traj.h = h;
  traj.initial_state = init;
  RigidBodyState state = init;

  for (int step = 0; step < options.steps; ++step) {
    if (!state.gen_velocity.allFinite() || !state.position.allFinite()) {
      throw SimulationError("simulate_trajectory: non-finite state at step " +
                            std::to_string(step));
    }
    const double depth = -min_vertex_height(state, shape, ground);
    traj.stats.max_penetration = std::max(traj.stats.max_penetration, depth);
    if (depth > options.deep_penetration_factor * kPenetrationTol) {
      throw SimulationError("simulate_trajectory: deep penetration at step " +
                            std::to_string(step));
    }

    const Mat6 M = mass_matrix(state, model);
    const Eigen::LLT<Mat6> llt(M);
    const auto patch = detect_patch(state, shape, ground);

    StepRecord rec;
    rec.time = step * h;
    rec.state = state;
    rec.in_contact = patch.has_value();

    Vec6 contact_impulse = Vec6::Zero();
    bool branch_known = false;
    ContactState branch = ContactState::kDetach;
    double lcp_res = 0.0;

    if (patch) {
      rec.patch_dim = patch->dimensionality;
      rec.patch_label = patch->feature_label;
      switch (handler.kind) {
        case HandlerKind::kGroundTruth: {
          const GtImpulseResult gt =
              gt_contact_impulse(state, model, *patch, gravity, ground, h);
          contact_impulse = gt.impulse;
          lcp_res = gt.complementarity;
          break;
        }
        case HandlerKind::kAugmented: {
          const HandleResult res = handle_contact(state, model, *patch, gravity,
                                                  *handler.models, h, handler.noise);
          contact_impulse = res.impulse;
          branch = res.branch;
          branch_known = true;
          lcp_res = res.lcp_complementarity;
          if (res.static_fallback) ++traj.stats.static_fallbacks;
          if (res.branch == ContactState::kDetach) {
            traj.stats.max_detach_impulse =
                std::max(traj.stats.max_detach_impulse, res.impulse.norm());
          }
          break;
        }
        case HandlerKind::kPdd:
          contact_impulse = pdd_impulse(state, model, *patch, gravity, *handler.pdd, h);
          break;
      }
      traj.stats.max_complementarity = std::max(traj.stats.max_complementarity, lcp_res);
    }

    // Velocity update, then the guard that keeps any vertex from crossing
    // the plane within this step.
    Vec6 qdot_next = integrate_velocity(state, M, h, gravity, contact_impulse);
    if (patch) {
      // The handler's own contracts, measured before the guard: the normal
      // LCP leaves no patch point approaching, and the static solve leaves
      // the constrained patch at rest. The guard may afterwards soft-land an
      // incoming feature of the same body, which is next-contact physics,
      // not a property of this handler call.
      for (const auto& pt : patch->points_world) {
        const double vn = (point_jacobian(state, pt) * qdot_next).y();
        traj.stats.min_normal_velocity = std::min(traj.stats.min_normal_velocity, vn);
      }
      if (branch_known && branch == ContactState::kStatic) {
        const MatX Jc = static_constraint_jacobian(state, *patch);
        const double patch_speed = (Jc * qdot_next).cwiseAbs().maxCoeff();
        traj.stats.max_static_patch_speed =
            std::max(traj.stats.max_static_patch_speed, patch_speed);
      }
    }
    bool guard_fired = false;
    const Vec6 guard_impulse =
        touchdown_guard(state, llt, shape, ground, h, qdot_next, guard_fired);
    if (guard_fired) ++traj.stats.guard_activations;
    const Vec6 total_impulse = contact_impulse + guard_impulse;

    if (patch) {
      if (traj.first_contact_step < 0) {
        traj.first_contact_step = step;
        traj.first_contact_impulse = total_impulse;
      }
    }

    rec.impulse = total_impulse;
    if (patch) {
      if (branch_known) {
        rec.event = branch;
        rec.has_event = true;
      } else {
        rec.event = label_contact_instance(total_impulse, *patch, state, qdot_next, h,
                                           model.mass);
        rec.has_event = true;
      }
      if (options.collect_instances) {
        ContactInstance inst;
        inst.state_before = state;
        inst.qdot1 = integrate_velocity(state, M, h, gravity, Vec6::Zero());
        inst.patch = *patch;
        inst.features = encode_features(state, inst.qdot1, *patch);
        inst.impulse = recover_impulse(state.gen_velocity, qdot_next, M, h,
                                       gravity.gen_force);
        inst.label = label_contact_instance(inst.impulse, *patch, state, qdot_next, h,
                                            model.mass);
        inst.friction_impulse =
            project_friction_target(inst.impulse, friction_basis(state, *patch));
        traj.instances.push_back(std::move(inst));
      }
    }
    traj.steps.push_back(std::move(rec));
    state = integrate_position(state, qdot_next, h);
  }
  traj.final_state = state;
  return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trajectory file " + path);
  nlohmann::json meta;
  meta["format"] = "patchsim-trajectory";
  meta["version"] = 1;
  meta["steps"] = traj.steps.size();
  meta["first_contact_step"] = traj.first_contact_step;
  out << "# " << meta.dump() << "\n";
  char buf[640];
  for (const auto& r : traj.steps) {
    const auto& s = r.state;
    std::snprintf(buf, sizeof buf,
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                  "%.17g %.17g %.17g %.17g %.17g %.17g "
                  "%.17g %.17g %.17g %.17g %.17g %.17g %d %d %s %s\n",
                  r.time, s.position.x(), s.position.y(), s.position.z(),
                  s.orientation.w(), s.orientation.x(), s.orientation.y(),
                  s.orientation.z(), s.gen_velocity[0], s.gen_velocity[1],
                  s.gen_velocity[2], s.gen_velocity[3], s.gen_velocity[4],
                  s.gen_velocity[5], r.impulse[0], r.impulse[1], r.impulse[2],
                  r.impulse[3], r.impulse[4], r.impulse[5], r.in_contact ? 1 : 0,
                  r.patch_dim, r.patch_label.empty() ? "-" : r.patch_label.c_str(),
                  r.has_event ? to_string(r.event) : "-");
    out << buf;
  }
  const auto& s = traj.final_state;
  std::snprintf(buf, sizeof buf,
                "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                "%.17g %.17g %.17g %.17g %.17g %.17g "
                "0 0 0 0 0 0 0 -1 - -\n",
                double(traj.steps.size()) * traj.h,
                s.position.x(), s.position.y(), s.position.z(), s.orientation.w(),
                s.orientation.x(), s.orientation.y(), s.orientation.z(),
                s.gen_velocity[0], s.gen_velocity[1], s.gen_velocity[2],
                s.gen_velocity[3], s.gen_velocity[4], s.gen_velocity[5]);
  out << buf;
}

}  // namespace patchsim
