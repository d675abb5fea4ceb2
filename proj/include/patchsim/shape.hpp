#pragma once

#include <array>
#include <string>
#include <vector>

#include "patchsim/types.hpp"

namespace patchsim {

/// Convex polytope in body frame. Vertices, edges, and faces carry the
/// short labels used to name contact events (vertices "1".."8", edges
/// "a".."l", faces "A".."F" for the box).
struct ConvexShape {
  std::string name;
  std::vector<Vec3> vertices;                      // body frame [m]
  std::vector<std::array<int, 2>> edges;           // vertex index pairs
  std::vector<std::vector<int>> faces;             // vertex index loops
  std::vector<std::string> vertex_labels;
  std::vector<std::string> edge_labels;
  std::vector<std::string> face_labels;

  // Optional inertial data so one file can describe a complete body.
  double mass = 1.0;
  Mat3 inertia_body = Mat3::Identity();

  /// Checks convex position of the vertex set and label uniqueness.
  /// Throws DataError on violation.
  void validate() const;

  double bounding_radius() const;
};

/// Axis-aligned box of full edge length `edge`, uniform density.
ConvexShape make_box(double edge = 0.2, double mass = 1.0);

/// Regular pentagon prism: circumradius of the pentagon cross-section and
/// full length along its axis (y in body frame).
ConvexShape make_pentagon_prism(double circumradius = 0.1, double length = 0.2,
                                double mass = 1.0);

/// Returns the built-in shape for a CLI-facing name ("box",
/// "pentagon-prism"). Throws DataError for unknown names.
ConvexShape make_named_shape(const std::string& name);

/// Plain-text shape file, one directive per line:
///   shape <name>
///   mass <kg>
///   inertia <xx> <yy> <zz> <xy> <xz> <yz>
///   vertex <label> <x> <y> <z>
///   edge <label> <v0> <v1>
///   face <label> <v0> <v1> ... <vk>
/// Vertex references are 0-based indices in declaration order. '#' starts
/// a comment.
ConvexShape load_shape(const std::string& path);
void save_shape(const ConvexShape& shape, const std::string& path);

}  // namespace patchsim
