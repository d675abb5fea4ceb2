#include "patchsim/articulated.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <fstream>
#include <sstream>

namespace patchsim {

ChainKinematics compute_chain_kinematics(const UpstreamChain& chain,
                                         double gravity_accel) {
  const int n = chain.dof();
  if (n == 0) throw DataError("chain has no links");
  if (chain.theta.size() != n || chain.theta_dot.size() != n) {
    throw DataError("chain state size does not match link count");
  }
  ChainKinematics k;
  k.rotation.resize(std::size_t(n));
  k.joint_pos.resize(std::size_t(n));
  k.axis_world.resize(std::size_t(n));
  k.com.resize(std::size_t(n));

  Mat3 R_parent = Mat3::Identity();
  Vec3 joint = chain.pin_world;
  for (int i = 0; i < n; ++i) {
    const auto& link = chain.links[std::size_t(i)];
    const Vec3 axis_w = (R_parent * link.axis).normalized();
    const Mat3 R = Eigen::AngleAxisd(chain.theta[i], axis_w).toRotationMatrix() * R_parent;
    k.rotation[std::size_t(i)] = R;
    k.joint_pos[std::size_t(i)] = joint;
    k.axis_world[std::size_t(i)] = axis_w;
    k.com[std::size_t(i)] = joint + R * link.com_offset;
    joint = joint + R * link.tip_offset;
    R_parent = R;
  }
  k.tip = joint;

  // Point Jacobian columns: axis_j x (x - joint_j) for j <= link index.
  auto point_jac = [&](const Vec3& x, int link_idx) {
    MatX J = MatX::Zero(3, n);
    for (int j = 0; j <= link_idx; ++j) {
      J.col(j) = k.axis_world[std::size_t(j)].cross(x - k.joint_pos[std::size_t(j)]);
    }
    return J;
  };

  k.tip_jacobian = point_jac(k.tip, n - 1);
  k.mass_matrix = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& link = chain.links[std::size_t(i)];
    const MatX Jv = point_jac(k.com[std::size_t(i)], i);
    MatX Jw = MatX::Zero(3, n);
    for (int j = 0; j <= i; ++j) Jw.col(j) = k.axis_world[std::size_t(j)];
    const Mat3 Iw = k.rotation[std::size_t(i)] * link.inertia *
                    k.rotation[std::size_t(i)].transpose();
    k.mass_matrix += link.mass * Jv.transpose() * Jv + Jw.transpose() * Iw * Jw;
  }

  // Recursive Newton-Euler with zero joint accelerations gives the bias
  // torques (gravity + velocity products). Gravity enters as a virtual base
  // acceleration.
  std::vector<Vec3> omega{std::size_t(n)}, alpha{std::size_t(n)}, a_joint{std::size_t(n)},
      a_com{std::size_t(n)};
  Vec3 w_parent = Vec3::Zero(), al_parent = Vec3::Zero();
  Vec3 a_parent_tip = Vec3(0.0, gravity_accel, 0.0);  // -gravity
  for (int i = 0; i < n; ++i) {
    const std::size_t ii = std::size_t(i);
    const Vec3 ax = k.axis_world[ii];
    omega[ii] = w_parent + ax * chain.theta_dot[i];
    alpha[ii] = al_parent + w_parent.cross(ax * chain.theta_dot[i]);
    a_joint[ii] = a_parent_tip;
    const Vec3 r_c = k.com[ii] - k.joint_pos[ii];
    a_com[ii] = a_joint[ii] + alpha[ii].cross(r_c) + omega[ii].cross(omega[ii].cross(r_c));
    const Vec3 r_tip = (i + 1 < n ? Vec3(k.joint_pos[ii + 1] - k.joint_pos[ii])
                                  : Vec3(k.tip - k.joint_pos[ii]));
    a_parent_tip =
        a_joint[ii] + alpha[ii].cross(r_tip) + omega[ii].cross(omega[ii].cross(r_tip));
    w_parent = omega[ii];
    al_parent = alpha[ii];
  }
  k.bias = VecX::Zero(n);
  Vec3 f_child = Vec3::Zero(), n_child = Vec3::Zero();
  Vec3 child_joint = k.tip;
  for (int i = n - 1; i >= 0; --i) {
    const std::size_t ii = std::size_t(i);
    const auto& link = chain.links[ii];
    const Mat3 Iw = k.rotation[ii] * link.inertia * k.rotation[ii].transpose();
    const Vec3 F = link.mass * a_com[ii];
    const Vec3 N = Iw * alpha[ii] + omega[ii].cross(Iw * omega[ii]);
    const Vec3 r_c = k.com[ii] - k.joint_pos[ii];
    const Vec3 r_child = child_joint - k.joint_pos[ii];
    const Vec3 n_total = N + r_c.cross(F) + n_child + r_child.cross(f_child);
    k.bias[i] = k.axis_world[ii].dot(n_total);
    f_child = F + f_child;
    n_child = n_total;
    child_joint = k.joint_pos[ii];
  }
  return k;
}

double ArticulatedSystem::anchor_gap() const {
  return (anchor_world() - compute_chain_kinematics(chain).tip).norm();
}

JointJacobians joint_jacobians(const ArticulatedSystem& sys) {
  JointJacobians jj;
  jj.J = point_jacobian(sys.distal, sys.anchor_world());
  jj.Jhat = compute_chain_kinematics(sys.chain).tip_jacobian;
  return jj;
}

Vec3 initial_joint_force_guess(const ArticulatedSystem& sys, double h,
                               double gravity_accel) {
  const ChainKinematics k = compute_chain_kinematics(sys.chain, gravity_accel);
  const VecX tau_hat = -k.bias;
  const Eigen::LDLT<MatX> Mhat(k.mass_matrix);
  const MatX Jh = k.tip_jacobian;
  const Mat3 S = h * (Jh * Mhat.solve(Jh.transpose()));
  Eigen::FullPivLU<Mat3> lu(S);
  if (!lu.isInvertible()) {
    throw SolverError("initial_joint_force_guess: singular chain Delassus operator");
  }
  return lu.solve(Jh * (sys.chain.theta_dot + h * Mhat.solve(tau_hat)));
}

RootSolveReport powell_hybrid_solve(const std::function<VecX(const VecX&)>& G,
                                    const VecX& x0, double tol, int max_evaluations) {
  RootSolveReport rep;
  const int n = int(x0.size());
  VecX x = x0;
  VecX F = G(x);
  rep.g_evaluations = 1;
  rep.solution = x;
  rep.residual_norm = F.norm();
  if (rep.residual_norm <= tol) {
    rep.converged = true;
    return rep;
  }

  auto fd_jacobian = [&](const VecX& at, const VecX& f_at, MatX& Jout) {
    Jout.resize(n, n);
    for (int i = 0; i < n; ++i) {
      const double eps = 1e-6 * std::max(1.0, std::abs(at[i]));
      VecX xp = at;
      xp[i] += eps;
      const VecX fp = G(xp);
      ++rep.g_evaluations;
      Jout.col(i) = (fp - f_at) / eps;
    }
  };

  MatX J;
  fd_jacobian(x, F, J);
  double delta = 100.0 * std::max(1.0, x.norm());
  int consecutive_failures = 0;

  while (rep.g_evaluations < max_evaluations) {
    // Newton step; fall back to the gradient direction if J is singular.
    const Eigen::ColPivHouseholderQR<MatX> qr(J);
    VecX newton = -qr.solve(F);
    if (!newton.allFinite()) newton = -J.transpose() * F;

    // Dogleg within the trust radius.
    VecX step;
    if (newton.norm() <= delta) {
      step = newton;
    } else {
      const VecX grad = J.transpose() * F;
      const double gnorm2 = grad.squaredNorm();
      const double jg2 = (J * grad).squaredNorm();
      if (gnorm2 <= 0.0 || jg2 <= 0.0) {
        step = newton * (delta / newton.norm());
      } else {
        const VecX cauchy = -(gnorm2 / jg2) * grad;
        if (cauchy.norm() >= delta) {
          step = -grad * (delta / grad.norm());
        } else {
          // Point on the cauchy -> newton segment with |step| = delta.
          const VecX d = newton - cauchy;
          const double a = d.squaredNorm();
          const double b = 2.0 * cauchy.dot(d);
          const double cq = cauchy.squaredNorm() - delta * delta;
          const double t = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * cq))) / (2.0 * a);
          step = cauchy + t * d;
        }
      }
    }

    const VecX x_new = x + step;
    const VecX F_new = G(x_new);
    ++rep.g_evaluations;

    const double actual = F.squaredNorm() - F_new.squaredNorm();
    const VecX predicted_res = F + J * step;
    const double predicted = F.squaredNorm() - predicted_res.squaredNorm();
    const double rho = predicted > 0.0 ? actual / predicted : (actual > 0.0 ? 1.0 : -1.0);

    // Broyden rank-1 update with the tried step.
    const double s2 = step.squaredNorm();
    if (s2 > 0.0) J += ((F_new - F) - J * step) * step.transpose() / s2;

    if (rho > 1e-4) {
      x = x_new;
      F = F_new;
      consecutive_failures = 0;
      if (F.norm() < rep.residual_norm) {
        rep.solution = x;
        rep.residual_norm = F.norm();
      }
      if (rep.residual_norm <= tol) {
        rep.converged = true;
        return rep;
      }
    } else {
      ++consecutive_failures;
    }

    if (rho < 0.25) {
      delta = 0.5 * std::max(step.norm(), 1e-3 * delta);
    } else if (rho > 0.75 && step.norm() > 0.9 * delta) {
      delta *= 2.0;
    }
    if (delta < 1e-12 * std::max(1.0, x.norm())) break;

    // A stalled Broyden model gets refreshed from finite differences.
    if (consecutive_failures >= 2 && rep.g_evaluations + n < max_evaluations) {
      fd_jacobian(x, F, J);
      consecutive_failures = 0;
    }
  }
  return rep;
}

namespace {

struct JointSolveTerms {
  Mat3 A;
  Vec3 c;
  Mat36 J;
  Mat6 M;
  MatX Jhat;
  MatX Mhat;
  VecX tau_hat;
  AppliedForce tau;  // distal applied force (gravity)
};

JointSolveTerms joint_terms(const ArticulatedSystem& sys, double h,
                            double gravity_accel) {
  JointSolveTerms t;
  const ChainKinematics k = compute_chain_kinematics(sys.chain, gravity_accel);
  t.Jhat = k.tip_jacobian;
  t.Mhat = k.mass_matrix;
  t.tau_hat = -k.bias;
  t.J = point_jacobian(sys.distal, sys.anchor_world());
  t.M = mass_matrix(sys.distal, sys.distal_model);
  t.tau = gravity_force(sys.distal_model, gravity_accel);
  const Eigen::LLT<Mat6> llt(t.M);
  const Eigen::LDLT<MatX> mh(t.Mhat);
  t.A = h * (t.J * llt.solve(t.J.transpose())) +
        h * (t.Jhat * mh.solve(t.Jhat.transpose()));
  t.c = t.J * sys.distal.gen_velocity + h * (t.J * llt.solve(t.tau.gen_force)) -
        (t.Jhat * sys.chain.theta_dot + h * (t.Jhat * mh.solve(t.tau_hat)));
  return t;
}

}  // namespace

double joint_residual_scale(const ArticulatedSystem& sys, double h,
                            double gravity_accel) {
  const JointSolveTerms t = joint_terms(sys, h, gravity_accel);
  return std::max({t.c.norm(), (t.J * sys.distal.gen_velocity).norm(), 1e-6});
}

Vec3 evaluate_joint_residual(const ArticulatedSystem& sys, const Vec3& f_j,
                             const DistalContactFn& contact, const ContactPatch* patch,
                             double h, double gravity_accel) {
  const JointSolveTerms t = joint_terms(sys, h, gravity_accel);
  Vec6 p = Vec6::Zero();
  if (patch != nullptr && !patch->empty()) {
    AppliedForce tau_total = t.tau;
    tau_total.gen_force += t.J.transpose() * f_j;
    p = contact(sys.distal, sys.distal_model, *patch, tau_total);
  }
  const Eigen::LLT<Mat6> llt(t.M);
  return t.A * f_j + t.J * llt.solve(p) + t.c;
}

ArticulatedStepReport step_articulated(ArticulatedSystem& sys, const HandlerConfig& handler,
                                       const GroundPlane& ground, double h,
                                       double gravity_accel) {
  if (sys.distal_model.shape == nullptr) {
    throw DataError("step_articulated: distal model has no shape");
  }
  ArticulatedStepReport rep;
  const JointSolveTerms t = joint_terms(sys, h, gravity_accel);
  const auto patch = detect_patch(sys.distal, *sys.distal_model.shape, ground);
  rep.in_contact = patch.has_value();

  DistalContactFn contact;
  switch (handler.kind) {
    case HandlerKind::kGroundTruth:
      contact = [&](const RigidBodyState& s, const BodyModel& m, const ContactPatch& pa,
                    const AppliedForce& f) {
        return gt_contact_impulse(s, m, pa, f, ground, h).impulse;
      };
      break;
    case HandlerKind::kAugmented:
      contact = [&](const RigidBodyState& s, const BodyModel& m, const ContactPatch& pa,
                    const AppliedForce& f) {
        return handle_contact(s, m, pa, f, *handler.models, h, handler.noise).impulse;
      };
      break;
    case HandlerKind::kPdd:
      contact = [&](const RigidBodyState& s, const BodyModel& m, const ContactPatch& pa,
                    const AppliedForce& f) {
        return pdd_impulse(s, m, pa, f, *handler.pdd, h);
      };
      break;
  }

  Vec3 f_j;
  Vec6 p = Vec6::Zero();
  const Eigen::LLT<Mat6> llt(t.M);
  if (!patch) {
    // H == 0: the joint-velocity equality is linear.
    f_j = t.A.ldlt().solve(-t.c);
    rep.root.solution = f_j;
    rep.root.converged = true;
    rep.root.residual_norm = (t.A * f_j + t.c).norm();
  } else {
    const double scale = std::max({t.c.norm(), (t.J * sys.distal.gen_velocity).norm(), 1e-6});
    const double tol = 0.005 * scale;
    int flips = 0;
    bool have_last = false;
    ContactState last_branch = ContactState::kDetach;
    auto G = [&](const VecX& x) -> VecX {
      AppliedForce tau_total = t.tau;
      tau_total.gen_force += t.J.transpose() * Vec3(x);
      Vec6 imp;
      if (handler.kind == HandlerKind::kAugmented) {
        const HandleResult hr = handle_contact(sys.distal, sys.distal_model, *patch,
                                               tau_total, *handler.models, h, handler.noise);
        imp = hr.impulse;
        if (have_last && hr.branch != last_branch) ++flips;
        last_branch = hr.branch;
        have_last = true;
      } else {
        imp = contact(sys.distal, sys.distal_model, *patch, tau_total);
      }
      return t.A * Vec3(x) + t.J * llt.solve(imp) + t.c;
    };
    // Eq.-style heuristic guess; a kinematically singular pose (collinear
    // chain) falls back to zero, which Powell's method tolerates.
    Vec3 x0 = Vec3::Zero();
    try {
      x0 = initial_joint_force_guess(sys, h, gravity_accel);
    } catch (const SolverError&) {
    }
    rep.root = powell_hybrid_solve(G, x0, tol);
    rep.root.class_flips = flips;
    if (!rep.root.converged) {
      throw SimulationError("step_articulated: joint force solve did not converge");
    }
    f_j = rep.root.solution;
    AppliedForce tau_total = t.tau;
    tau_total.gen_force += t.J.transpose() * f_j;
    if (handler.kind == HandlerKind::kAugmented) {
      const HandleResult hr = handle_contact(sys.distal, sys.distal_model, *patch,
                                             tau_total, *handler.models, h, handler.noise);
      p = hr.impulse;
      if (hr.branch == ContactState::kDetach) {
        rep.contact_stats.max_detach_impulse = p.norm();
      }
    } else {
      p = contact(sys.distal, sys.distal_model, *patch, tau_total);
    }
  }
  rep.joint_force = f_j;
  rep.contact_impulse = p;

  // Distal update, then upstream with the reaction -f_j.
  AppliedForce tau_total = t.tau;
  tau_total.gen_force += t.J.transpose() * f_j;
  Vec6 qdot_next = integrate_velocity(sys.distal, t.M, h, tau_total, p);
  if (patch) {
    for (const auto& pt : patch->points_world) {
      const double vn = (point_jacobian(sys.distal, pt) * qdot_next).y();
      rep.contact_stats.min_normal_velocity =
          std::min(rep.contact_stats.min_normal_velocity, vn);
    }
  }
  const Eigen::LDLT<MatX> mh(t.Mhat);
  const VecX theta_dot_next =
      sys.chain.theta_dot + h * mh.solve(t.tau_hat - t.Jhat.transpose() * f_j);

  sys.distal = integrate_position(sys.distal, qdot_next, h);
  sys.chain.theta += h * theta_dot_next;
  sys.chain.theta_dot = theta_dot_next;

  // Velocity-level joint maintenance leaves O(h^2) anchor drift; project the
  // distal body back onto the chain tip so coincidence holds at step starts.
  const Vec3 tip = compute_chain_kinematics(sys.chain).tip;
  const Vec3 gap = sys.anchor_world() - tip;
  rep.anchor_drift_before_projection = gap.norm();
  sys.distal.position -= gap;
  return rep;
}

ArticulatedSystem make_three_link_demo(const ConvexShape* box_shape) {
  if (box_shape == nullptr) throw DataError("make_three_link_demo: null shape");
  ArticulatedSystem sys;
  sys.chain.pin_world = Vec3(0.0, 0.6, 0.0);

  // Point pin realized as a zero-length x/y gimbal ahead of the first rod's
  // own z hinge, so the joint-force heuristic's 3x3 system stays invertible
  // away from collinear poses.
  ChainLink gimbal;
  gimbal.mass = 0.0;
  gimbal.inertia = 1e-8 * Mat3::Identity();
  gimbal.com_offset = Vec3::Zero();
  gimbal.tip_offset = Vec3::Zero();
  ChainLink gx = gimbal, gy = gimbal;
  gx.axis = Vec3::UnitX();
  gy.axis = Vec3::UnitY();

  ChainLink link;
  link.mass = 0.5;
  const double L = 0.25;
  // Slender rod: transverse inertia mL^2/12, tiny axial term.
  link.inertia = Mat3::Zero();
  link.inertia(0, 0) = 1e-5;
  link.inertia(1, 1) = link.mass * L * L / 12.0;
  link.inertia(2, 2) = link.mass * L * L / 12.0;
  link.axis = Vec3::UnitZ();
  link.com_offset = Vec3(L / 2.0, 0.0, 0.0);
  link.tip_offset = Vec3(L, 0.0, 0.0);
  sys.chain.links = {gx, gy, link, link};
  sys.chain.theta = VecX::Zero(4);      // horizontal start
  sys.chain.theta_dot = VecX::Zero(4);

  sys.distal_model.shape = box_shape;
  sys.distal_model.mass = box_shape->mass;
  sys.distal_model.inertia_body = box_shape->inertia_body;
  double top = 0.0;
  for (const auto& v : box_shape->vertices) top = std::max(top, v.y());
  sys.anchor_local = Vec3(0.0, top, 0.0);

  // Place the box so its anchor meets the chain tip, hanging below it.
  const Vec3 tip = compute_chain_kinematics(sys.chain).tip;
  sys.distal.position = tip - sys.anchor_local;
  sys.distal.orientation = Quat::Identity();
  sys.distal.gen_velocity.setZero();
  return sys;
}

ArticulatedSystem load_chain(const std::string& path, const ConvexShape* shape) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open chain file " + path);
  ArticulatedSystem sys;
  sys.distal_model.shape = shape;
  if (shape != nullptr) {
    sys.distal_model.mass = shape->mass;
    sys.distal_model.inertia_body = shape->inertia_body;
  }
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    auto fail = [&](const char* what) {
      throw DataError("chain file " + path + ":" + std::to_string(lineno) + ": " + what);
    };
    if (key == "pin") {
      if (!(ss >> sys.chain.pin_world.x() >> sys.chain.pin_world.y() >>
            sys.chain.pin_world.z()))
        fail("bad pin");
    } else if (key == "link") {
      ChainLink l;
      double ixx, iyy, izz;
      if (!(ss >> l.mass >> ixx >> iyy >> izz >> l.axis.x() >> l.axis.y() >> l.axis.z() >>
            l.com_offset.x() >> l.com_offset.y() >> l.com_offset.z() >> l.tip_offset.x() >>
            l.tip_offset.y() >> l.tip_offset.z()))
        fail("bad link");
      l.inertia = Vec3(ixx, iyy, izz).asDiagonal();
      sys.chain.links.push_back(l);
    } else if (key == "distal-mass") {
      if (!(ss >> sys.distal_model.mass)) fail("bad distal mass");
    } else if (key == "distal-anchor") {
      if (!(ss >> sys.anchor_local.x() >> sys.anchor_local.y() >> sys.anchor_local.z()))
        fail("bad distal anchor");
    } else {
      fail("unknown directive");
    }
  }
  if (sys.chain.links.empty()) throw DataError("chain file has no links: " + path);
  sys.chain.theta = VecX::Zero(sys.chain.dof());
  sys.chain.theta_dot = VecX::Zero(sys.chain.dof());
  const Vec3 tip = compute_chain_kinematics(sys.chain).tip;
  sys.distal.position = tip - sys.anchor_local;
  return sys;
}

void save_chain(const ArticulatedSystem& sys, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write chain file " + path);
  char buf[512];
  std::snprintf(buf, sizeof buf, "pin %.17g %.17g %.17g\n", sys.chain.pin_world.x(),
                sys.chain.pin_world.y(), sys.chain.pin_world.z());
  out << buf;
  for (const auto& l : sys.chain.links) {
    std::snprintf(buf, sizeof buf,
                  "link %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                  "%.17g %.17g %.17g\n",
                  l.mass, l.inertia(0, 0), l.inertia(1, 1), l.inertia(2, 2), l.axis.x(),
                  l.axis.y(), l.axis.z(), l.com_offset.x(), l.com_offset.y(),
                  l.com_offset.z(), l.tip_offset.x(), l.tip_offset.y(), l.tip_offset.z());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "distal-mass %.17g\ndistal-anchor %.17g %.17g %.17g\n",
                sys.distal_model.mass, sys.anchor_local.x(), sys.anchor_local.y(),
                sys.anchor_local.z());
  out << buf;
}

}  // namespace patchsim
