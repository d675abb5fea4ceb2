#include <doctest.h>

#include <cstdio>

#include "oracles.hpp"
#include "patchsim/collision.hpp"
#include "patchsim/rng.hpp"

using namespace patchsim;

namespace {

RigidBodyState resting_box_state(const ConvexShape& box, double clearance = 0.0) {
  RigidBodyState s;
  double lowest = 0.0;
  for (const auto& v : box.vertices) lowest = std::min(lowest, v.y());
  s.position = Vec3(0.0, clearance - lowest, 0.0);
  return s;
}

}  // namespace

TEST_CASE("box resting flat gives a 4-point face patch") {
  const ConvexShape box = make_box();
  const GroundPlane ground;
  const RigidBodyState s = resting_box_state(box);
  const auto patch = detect_patch(s, box, ground);
  REQUIRE(patch.has_value());
  CHECK(patch->size() == 4);
  CHECK(patch->dimensionality == 2);
  CHECK(patch->feature_label == "A");
  CHECK((patch->normal - Vec3::UnitY()).norm() == 0.0);
  Vec3 mean = Vec3::Zero();
  for (const auto& p : patch->points_world) mean += p;
  mean /= 4.0;
  CHECK((patch->centroid - mean).norm() < 1e-15);
}

TEST_CASE("box balanced on an edge gives a 2-point line patch") {
  const ConvexShape box = make_box();
  const GroundPlane ground;
  RigidBodyState s;
  s.orientation = Quat(Eigen::AngleAxisd(M_PI / 4.0, Vec3::UnitX()));
  const Mat3 R = s.orientation.toRotationMatrix();
  double lowest = 1e9;
  for (const auto& v : box.vertices) lowest = std::min(lowest, (R * v).y());
  s.position = Vec3(0, -lowest, 0);
  const auto patch = detect_patch(s, box, ground);
  REQUIRE(patch.has_value());
  CHECK(patch->size() == 2);
  CHECK(patch->dimensionality == 1);
  CHECK(patch->feature_label.size() == 1);
  CHECK(patch->feature_label[0] >= 'a');
  CHECK(patch->feature_label[0] <= 'l');
}

TEST_CASE("box a meter above the ground has no patch") {
  const ConvexShape box = make_box();
  const GroundPlane ground;
  const RigidBodyState s = resting_box_state(box, 1.0);
  CHECK_FALSE(detect_patch(s, box, ground).has_value());
}

TEST_CASE("detection is invariant under horizontal translation") {
  const ConvexShape box = make_box();
  const GroundPlane ground;
  Rng rng(7);
  RigidBodyState s;
  s.orientation = random_rotation(rng);
  const Mat3 R = s.orientation.toRotationMatrix();
  double lowest = 1e9;
  for (const auto& v : box.vertices) lowest = std::min(lowest, (R * v).y());
  s.position = Vec3(0, -lowest, 0);
  const auto base = detect_patch(s, box, ground);
  REQUIRE(base.has_value());
  for (int trial = 0; trial < 10; ++trial) {
    RigidBodyState moved = s;
    moved.position += Vec3(normal(rng), 0.0, normal(rng));
    const auto patch = detect_patch(moved, box, ground);
    REQUIRE(patch.has_value());
    CHECK(patch->dimensionality == base->dimensionality);
    CHECK(patch->feature_label == base->feature_label);
  }
}

TEST_CASE("classify_patch_dim basic cases") {
  CHECK(classify_patch_dim({Vec3(0, 0, 0)}) == 0);
  CHECK(classify_patch_dim({Vec3(0, 0, 0), Vec3(0.1, 0, 0)}) == 1);
  CHECK(classify_patch_dim({Vec3(0, 0, 0), Vec3(0.1, 0, 0), Vec3(0, 0, 0.1)}) == 2);
  CHECK_THROWS_AS(classify_patch_dim({}), DataError);
}

TEST_CASE("near-degenerate triangle classifies as a line") {
  // Sliver with area ~1e-12 m^2: height 2e-11 over a 0.1 m base.
  const Vec3 a(0, 0, 0), b(0.1, 0, 0), c(0.05, 0, 2e-11);
  CHECK(oracle::triangle_area(a, b, c) == doctest::Approx(1e-12).epsilon(1e-6));
  CHECK(classify_patch_dim({a, b, c}) == 1);

  // Same base with real height stays a surface.
  const Vec3 c2(0.05, 0, 0.05);
  CHECK(classify_patch_dim({a, b, c2}) == 2);
}

TEST_CASE("classify_patch_dim is permutation invariant") {
  Rng rng(13);
  std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(0.1, 0, 0), Vec3(0.2, 0, 1e-9),
                           Vec3(0.05, 0, -1e-9)};
  const int base = classify_patch_dim(pts);
  for (int trial = 0; trial < 10; ++trial) {
    shuffle(pts, rng);
    CHECK(classify_patch_dim(pts) == base);
  }
}

TEST_CASE("patch_feature_label picks faces, edges, vertices, composites") {
  const ConvexShape box = make_box();
  CHECK(patch_feature_label({0, 1, 2, 3}, box) == "A");
  CHECK(patch_feature_label({2}, box) == "3");
  CHECK(patch_feature_label({0, 1}, box) == "a");
  CHECK(patch_feature_label({1, 0}, box) == "a");
  // Three corners of a face match no single feature.
  CHECK(patch_feature_label({0, 1, 2}, box) == "1+2+3");
}

TEST_CASE("shape file round trip") {
  const ConvexShape box = make_box(0.3, 2.5);
  const std::string path = "/tmp/patchsim_test_box.shape";
  save_shape(box, path);
  const ConvexShape loaded = load_shape(path);
  CHECK(loaded.name == box.name);
  CHECK(loaded.mass == doctest::Approx(box.mass));
  CHECK(loaded.vertices.size() == box.vertices.size());
  CHECK(loaded.edges.size() == box.edges.size());
  CHECK(loaded.faces.size() == box.faces.size());
  for (std::size_t i = 0; i < box.vertices.size(); ++i) {
    CHECK((loaded.vertices[i] - box.vertices[i]).norm() == 0.0);
    CHECK(loaded.vertex_labels[i] == box.vertex_labels[i]);
  }
  CHECK((loaded.inertia_body - box.inertia_body).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("shape validation rejects duplicate labels and concave sets") {
  ConvexShape s = make_box();
  s.vertex_labels[1] = s.vertex_labels[0];
  CHECK_THROWS_AS(s.validate(), DataError);

  ConvexShape c = make_box();
  c.vertices.push_back(Vec3::Zero());  // interior point
  c.vertex_labels.push_back("9");
  CHECK_THROWS_AS(c.validate(), DataError);
}

TEST_CASE("pentagon prism has the expected combinatorics") {
  const ConvexShape p = make_pentagon_prism();
  p.validate();
  CHECK(p.vertices.size() == 10);
  CHECK(p.edges.size() == 15);
  CHECK(p.faces.size() == 7);

  // Resting on a rectangular side face.
  const GroundPlane ground;
  RigidBodyState s;
  s.orientation = Quat(Eigen::AngleAxisd(M_PI / 2.0, Vec3::UnitZ()));
  const Mat3 R = s.orientation.toRotationMatrix();
  double lowest = 1e9;
  for (const auto& v : p.vertices) lowest = std::min(lowest, (R * v).y());
  s.position = Vec3(0, -lowest, 0);
  const auto patch = detect_patch(s, p, ground);
  REQUIRE(patch.has_value());
  CHECK(patch->dimensionality >= 1);
}

TEST_CASE("named shapes") {
  CHECK(make_named_shape("box").name == "box");
  CHECK(make_named_shape("pentagon-prism").name == "pentagon-prism");
  CHECK_THROWS_AS(make_named_shape("sphere"), DataError);
}
