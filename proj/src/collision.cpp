#include "patchsim/collision.hpp"

#include <algorithm>
#include <set>

namespace patchsim {

int classify_patch_dim(const std::vector<Vec3>& points, double eps_geo) {
  if (points.empty()) throw DataError("classify_patch_dim: empty point list");
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= double(points.size());
  double spread = 0.0;
  for (const auto& p : points) spread = std::max(spread, (p - mean).norm());
  if (spread <= eps_geo) return 0;

  const Vec3 dir = patch_line_direction(points);
  double off_line = 0.0;
  for (const auto& p : points) {
    const Vec3 d = p - mean;
    off_line = std::max(off_line, (d - dir * dir.dot(d)).norm());
  }
  return off_line <= eps_geo ? 1 : 2;
}

Vec3 patch_line_direction(const std::vector<Vec3>& points) {
  double best = -1.0;
  Vec3 dir = Vec3::UnitX();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = (points[j] - points[i]).norm();
      if (d > best) {
        best = d;
        dir = points[j] - points[i];
      }
    }
  }
  const double n = dir.norm();
  return n > 0.0 ? Vec3(dir / n) : Vec3::UnitX();
}

std::string patch_feature_label(const std::vector<int>& vertex_indices,
                                const ConvexShape& shape) {
  const std::set<int> contact(vertex_indices.begin(), vertex_indices.end());
  if (contact.size() == 1) return shape.vertex_labels[*contact.begin()];
  for (std::size_t f = 0; f < shape.faces.size(); ++f) {
    const std::set<int> fv(shape.faces[f].begin(), shape.faces[f].end());
    if (fv == contact) return shape.face_labels[f];
  }
  for (std::size_t e = 0; e < shape.edges.size(); ++e) {
    const std::set<int> ev{shape.edges[e][0], shape.edges[e][1]};
    if (ev == contact) return shape.edge_labels[e];
  }
  std::string composite;
  for (int v : contact) {
    if (!composite.empty()) composite += "+";
    composite += shape.vertex_labels[v];
  }
  return composite;
}

std::optional<ContactPatch> detect_patch(const RigidBodyState& state,
                                         const ConvexShape& shape,
                                         const GroundPlane& ground,
                                         double eps_pen) {
  ContactPatch patch;
  const Mat3 R = state.orientation.toRotationMatrix();
  for (std::size_t i = 0; i < shape.vertices.size(); ++i) {
    const Vec3 p = state.position + R * shape.vertices[i];
    if (p.y() - ground.height <= eps_pen) {
      patch.points_world.push_back(p);
      patch.vertex_indices.push_back(int(i));
    }
  }
  if (patch.points_world.empty()) return std::nullopt;
  patch.normal = GroundPlane::normal();
  patch.dimensionality = classify_patch_dim(patch.points_world);
  patch.centroid = Vec3::Zero();
  for (const auto& p : patch.points_world) patch.centroid += p;
  patch.centroid /= double(patch.points_world.size());
  patch.feature_label = patch_feature_label(patch.vertex_indices, shape);
  return patch;
}

}  // namespace patchsim
