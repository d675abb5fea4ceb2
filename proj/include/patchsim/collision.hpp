#pragma once

#include <optional>
#include <string>
#include <vector>

#include "patchsim/dynamics.hpp"
#include "patchsim/shape.hpp"
#include "patchsim/types.hpp"

namespace patchsim {

/// Tangential friction coefficients of the ground, per world axis.
/// Isotropic friction is mu_x == mu_z.
struct FrictionSpec {
  double mu_x = 1.0;
  double mu_z = 1.0;

  static FrictionSpec isotropic(double mu) { return {mu, mu}; }
  bool frictionless() const { return mu_x == 0.0 && mu_z == 0.0; }
};

/// Static horizontal ground plane with normal +y.
struct GroundPlane {
  double height = 0.0;
  FrictionSpec friction;

  static Vec3 normal() { return Vec3::UnitY(); }
};

/// Convex contact region between the body and the ground.
struct ContactPatch {
  std::vector<Vec3> points_world;
  std::vector<int> vertex_indices;  // shape vertices forming the patch
  Vec3 normal = Vec3::UnitY();      // from ground into body
  int dimensionality = 0;           // 0 point, 1 line, 2 surface
  Vec3 centroid = Vec3::Zero();
  std::string feature_label;

  bool empty() const { return points_world.empty(); }
  int size() const { return int(points_world.size()); }
};

/// 0 if all points collapse to one point within eps_geo, 1 if to a line,
/// 2 otherwise. Permutation invariant.
int classify_patch_dim(const std::vector<Vec3>& points, double eps_geo = kGeomTol);

/// Unit direction of a 1D patch (the contact line). Meaningful only for
/// dimensionality >= 1; picks the farthest point pair.
Vec3 patch_line_direction(const std::vector<Vec3>& points);

/// Label of the shape feature whose vertex set equals the contacting set:
/// face label, edge label, vertex label, or a '+'-joined composite when no
/// single feature matches.
std::string patch_feature_label(const std::vector<int>& vertex_indices,
                                const ConvexShape& shape);

/// Contact detector D: collects body vertices within eps_pen of the ground
/// plane. Returns nullopt when no vertex is in the band. The patch normal is
/// the ground normal.
std::optional<ContactPatch> detect_patch(const RigidBodyState& state,
                                         const ConvexShape& shape,
                                         const GroundPlane& ground,
                                         double eps_pen = kPenetrationTol);

}  // namespace patchsim
