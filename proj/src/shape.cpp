#include "patchsim/shape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace patchsim {

namespace {

void check_unique(const std::vector<std::string>& labels, const char* kind) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) {
      throw DataError(std::string("shape: duplicate ") + kind + " label '" + l + "'");
    }
  }
}

}  // namespace

void ConvexShape::validate() const {
  if (vertices.empty()) throw DataError("shape: no vertices");
  if (vertex_labels.size() != vertices.size() ||
      edge_labels.size() != edges.size() || face_labels.size() != faces.size()) {
    throw DataError("shape: label count mismatch");
  }
  check_unique(vertex_labels, "vertex");
  check_unique(edge_labels, "edge");
  check_unique(face_labels, "face");
  for (const auto& e : edges) {
    if (e[0] < 0 || e[1] < 0 || e[0] >= int(vertices.size()) || e[1] >= int(vertices.size()))
      throw DataError("shape: edge vertex index out of range");
  }
  for (const auto& f : faces) {
    if (f.size() < 3) throw DataError("shape: face with fewer than 3 vertices");
    for (int v : f) {
      if (v < 0 || v >= int(vertices.size()))
        throw DataError("shape: face vertex index out of range");
    }
  }
  // Convex position: every vertex must be extreme, i.e. strictly outside the
  // hull of the others along some direction. A cheap sufficient test: for
  // each vertex, support maximization along (vertex - centroid) must pick it.
  Vec3 centroid = Vec3::Zero();
  for (const auto& v : vertices) centroid += v;
  centroid /= double(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec3 dir = vertices[i] - centroid;
    if (dir.norm() < 1e-12) throw DataError("shape: vertex at centroid is not extreme");
    double best = -1e300;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < vertices.size(); ++j) {
      const double s = dir.dot(vertices[j]);
      if (s > best + 1e-12) {
        best = s;
        arg = j;
      }
    }
    if (arg != i && std::abs(dir.dot(vertices[arg] - vertices[i])) > 1e-9) {
      throw DataError("shape: vertex set is not in convex position");
    }
  }
}

double ConvexShape::bounding_radius() const {
  double r = 0.0;
  for (const auto& v : vertices) r = std::max(r, v.norm());
  return r;
}

ConvexShape make_box(double edge, double mass) {
  ConvexShape s;
  s.name = "box";
  s.mass = mass;
  const double a = 0.5 * edge;
  // Vertices numbered 1..8: bottom face (y=-a) counterclockwise seen from
  // above, then top face (y=+a) in matching order.
  s.vertices = {
      {-a, -a, -a}, {a, -a, -a}, {a, -a, a}, {-a, -a, a},
      {-a, a, -a},  {a, a, -a},  {a, a, a},  {-a, a, a},
  };
  for (int i = 1; i <= 8; ++i) s.vertex_labels.push_back(std::to_string(i));
  s.edges = {
      {0, 1}, {1, 2}, {2, 3}, {3, 0},  // bottom ring: a b c d
      {4, 5}, {5, 6}, {6, 7}, {7, 4},  // top ring:    e f g h
      {0, 4}, {1, 5}, {2, 6}, {3, 7},  // verticals:   i j k l
  };
  for (char c = 'a'; c < 'a' + 12; ++c) s.edge_labels.push_back(std::string(1, c));
  s.faces = {
      {0, 1, 2, 3},  // A bottom
      {4, 5, 6, 7},  // B top
      {0, 1, 5, 4},  // C
      {1, 2, 6, 5},  // D
      {2, 3, 7, 6},  // E
      {3, 0, 4, 7},  // F
  };
  for (char c = 'A'; c < 'A' + 6; ++c) s.face_labels.push_back(std::string(1, c));
  const double m12 = mass / 12.0;
  const double e2 = edge * edge;
  s.inertia_body = (m12 * 2.0 * e2) * Mat3::Identity();
  return s;
}

ConvexShape make_pentagon_prism(double circumradius, double length, double mass) {
  ConvexShape s;
  s.name = "pentagon-prism";
  s.mass = mass;
  const double hl = 0.5 * length;
  // Pentagon cross-section in the x-z plane, prism axis along y.
  for (int ring = 0; ring < 2; ++ring) {
    const double y = ring == 0 ? -hl : hl;
    for (int k = 0; k < 5; ++k) {
      const double ang = 2.0 * M_PI * k / 5.0 + M_PI / 2.0;
      s.vertices.push_back(Vec3(circumradius * std::cos(ang), y, circumradius * std::sin(ang)));
    }
  }
  for (int i = 1; i <= 10; ++i) s.vertex_labels.push_back(std::to_string(i));
  for (int k = 0; k < 5; ++k) s.edges.push_back({k, (k + 1) % 5});           // bottom ring
  for (int k = 0; k < 5; ++k) s.edges.push_back({5 + k, 5 + (k + 1) % 5});   // top ring
  for (int k = 0; k < 5; ++k) s.edges.push_back({k, 5 + k});                 // verticals
  for (char c = 'a'; c < 'a' + 15; ++c) s.edge_labels.push_back(std::string(1, c));
  s.faces.push_back({0, 1, 2, 3, 4});       // A bottom pentagon
  s.faces.push_back({5, 6, 7, 8, 9});       // B top pentagon
  for (int k = 0; k < 5; ++k) {             // C..G side rectangles
    s.faces.push_back({k, (k + 1) % 5, 5 + (k + 1) % 5, 5 + k});
  }
  for (char c = 'A'; c < 'A' + 7; ++c) s.face_labels.push_back(std::string(1, c));
  // Solid regular-pentagon prism closed form: lamina moment about the prism
  // axis is (m R^2 / 6)(1 + 2 cos^2(pi/n)), transverse axes by the
  // perpendicular-axis theorem plus the rod term.
  const double r2 = circumradius * circumradius;
  const double c5 = std::cos(M_PI / 5.0);
  const double planar = mass * r2 * (1.0 + 2.0 * c5 * c5) / 6.0;
  const double axial = planar / 2.0;
  const double ll = mass * length * length / 12.0;
  Mat3 I = Mat3::Zero();
  I(0, 0) = axial + ll;
  I(1, 1) = planar;
  I(2, 2) = axial + ll;
  s.inertia_body = I;
  return s;
}

ConvexShape make_named_shape(const std::string& name) {
  if (name == "box") return make_box();
  if (name == "pentagon-prism" || name == "pentagon") return make_pentagon_prism();
  throw DataError("unknown shape name '" + name + "'");
}

ConvexShape load_shape(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open shape file " + path);
  ConvexShape s;
  bool have_inertia = false;
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
      throw DataError("shape file " + path + ":" + std::to_string(lineno) + ": " + what);
    };
    if (key == "shape") {
      if (!(ss >> s.name)) fail("missing shape name");
    } else if (key == "mass") {
      if (!(ss >> s.mass) || s.mass <= 0.0) fail("bad mass");
    } else if (key == "inertia") {
      double xx, yy, zz, xy, xz, yz;
      if (!(ss >> xx >> yy >> zz >> xy >> xz >> yz)) fail("bad inertia");
      s.inertia_body << xx, xy, xz, xy, yy, yz, xz, yz, zz;
      have_inertia = true;
    } else if (key == "vertex") {
      std::string label;
      double x, y, z;
      if (!(ss >> label >> x >> y >> z)) fail("bad vertex");
      s.vertex_labels.push_back(label);
      s.vertices.push_back(Vec3(x, y, z));
    } else if (key == "edge") {
      std::string label;
      int a, b;
      if (!(ss >> label >> a >> b)) fail("bad edge");
      s.edge_labels.push_back(label);
      s.edges.push_back({a, b});
    } else if (key == "face") {
      std::string label;
      if (!(ss >> label)) fail("bad face");
      std::vector<int> loop;
      int v;
      while (ss >> v) loop.push_back(v);
      if (loop.size() < 3) fail("face needs at least 3 vertices");
      s.face_labels.push_back(label);
      s.faces.push_back(loop);
    } else {
      fail("unknown directive");
    }
  }
  if (!have_inertia) {
    // Solid-box fallback from the bounding box.
    Vec3 lo = s.vertices.front(), hi = s.vertices.front();
    for (const auto& v : s.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    const Vec3 d = hi - lo;
    Mat3 I = Mat3::Zero();
    I(0, 0) = s.mass / 12.0 * (d.y() * d.y() + d.z() * d.z());
    I(1, 1) = s.mass / 12.0 * (d.x() * d.x() + d.z() * d.z());
    I(2, 2) = s.mass / 12.0 * (d.x() * d.x() + d.y() * d.y());
    s.inertia_body = I;
  }
  s.validate();
  return s;
}

void save_shape(const ConvexShape& shape, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write shape file " + path);
  char buf[256];
  out << "shape " << shape.name << "\n";
  std::snprintf(buf, sizeof buf, "mass %.17g\n", shape.mass);
  out << buf;
  const Mat3& I = shape.inertia_body;
  std::snprintf(buf, sizeof buf, "inertia %.17g %.17g %.17g %.17g %.17g %.17g\n",
                I(0, 0), I(1, 1), I(2, 2), I(0, 1), I(0, 2), I(1, 2));
  out << buf;
  for (std::size_t i = 0; i < shape.vertices.size(); ++i) {
    std::snprintf(buf, sizeof buf, "vertex %s %.17g %.17g %.17g\n",
                  shape.vertex_labels[i].c_str(), shape.vertices[i].x(),
                  shape.vertices[i].y(), shape.vertices[i].z());
    out << buf;
  }
  for (std::size_t i = 0; i < shape.edges.size(); ++i) {
    out << "edge " << shape.edge_labels[i] << " " << shape.edges[i][0] << " "
        << shape.edges[i][1] << "\n";
  }
  for (std::size_t i = 0; i < shape.faces.size(); ++i) {
    out << "face " << shape.face_labels[i];
    for (int v : shape.faces[i]) out << " " << v;
    out << "\n";
  }
}

}  // namespace patchsim
