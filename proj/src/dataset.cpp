#include "patchsim/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "patchsim/features.hpp"
#include "patchsim/friction.hpp"

namespace patchsim {

void ThrowConfig::validate() const {
  if (!(height_min <= height_max) || !(speed_min <= speed_max) ||
      !(angvel_min <= angvel_max)) {
    throw DataError("throw config: empty range");
  }
  if (steps <= 0 || h <= 0.0) throw DataError("throw config: steps and h must be positive");
}

ThrowConfig ThrowConfig::test_ranges() {
  ThrowConfig cfg;
  cfg.height_min = 0.3;
  cfg.height_max = 0.8;
  cfg.speed_min = 0.2;
  cfg.speed_max = 2.5;
  cfg.angvel_min = 0.5;
  cfg.angvel_max = 0.9 * 2.0 * M_PI;
  return cfg;
}

RigidBodyState sample_initial_state(const ThrowConfig& cfg, const ConvexShape& shape,
                                    const GroundPlane& ground, Rng& rng) {
  RigidBodyState state;
  state.orientation = random_rotation(rng);

  // Clearance of the lowest vertex equals the sampled height.
  const Mat3 R = state.orientation.toRotationMatrix();
  double lowest = 0.0;
  for (const auto& v : shape.vertices) lowest = std::min(lowest, (R * v).y());
  const double height = uniform(rng, cfg.height_min, cfg.height_max);
  state.position = Vec3(0.0, ground.height + height - lowest, 0.0);

  Vec3 dir = random_unit_vector(rng);
  dir.y() = -std::abs(dir.y());  // throws never aim upward
  const double speed = uniform(rng, cfg.speed_min, cfg.speed_max);
  state.gen_velocity.tail<3>() = speed * dir;
  state.gen_velocity.head<3>() =
      uniform(rng, cfg.angvel_min, cfg.angvel_max) * random_unit_vector(rng);
  return state;
}

ContactDataset generate_dataset(const ThrowConfig& cfg, const BodyModel& model,
                                const GroundPlane& ground, int n_throws) {
  cfg.validate();
  if (model.shape == nullptr) throw DataError("generate_dataset: model has no shape");
  ContactDataset ds;
  ds.meta.shape = model.shape->name;
  ds.meta.mu_x = ground.friction.mu_x;
  ds.meta.mu_z = ground.friction.mu_z;
  ds.meta.h = cfg.h;
  ds.meta.seed = cfg.seed;
  ds.meta.n_throws = n_throws;

  SimOptions options;
  options.h = cfg.h;
  options.steps = cfg.steps;
  options.collect_instances = true;
  HandlerConfig handler;
  handler.kind = HandlerKind::kGroundTruth;

  for (int t = 0; t < n_throws; ++t) {
    Rng rng(derive_seed(cfg.seed, std::uint64_t(t)));
    const RigidBodyState init = sample_initial_state(cfg, *model.shape, ground, rng);
    try {
      Trajectory traj = simulate_trajectory(handler, model, ground, init, options);
      for (auto& inst : traj.instances) {
        ds.by_dim[std::size_t(inst.patch.dimensionality)].push_back(std::move(inst));
      }
    } catch (const SimulationError&) {
      ++ds.meta.failed_throws;
    }
  }
  return ds;
}

namespace {

using nlohmann::json;

json meta_to_json(const DatasetMeta& m) {
  json j;
  j["format"] = "patchsim-dataset";
  j["version"] = 1;
  j["shape"] = m.shape;
  j["mu_x"] = m.mu_x;
  j["mu_z"] = m.mu_z;
  j["h"] = m.h;
  j["seed"] = m.seed;
  j["n_throws"] = m.n_throws;
  j["failed_throws"] = m.failed_throws;
  return j;
}

}  // namespace

void save_dataset(const ContactDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset " + path);
  json meta = meta_to_json(ds.meta);
  json counts = json::array();
  for (int d = 0; d < 3; ++d) counts.push_back(ds.by_dim[std::size_t(d)].size());
  meta["counts"] = counts;
  out << "# " << meta.dump() << "\n";
  char buf[64];
  for (int d = 0; d < 3; ++d) {
    for (const auto& inst : ds.by_dim[std::size_t(d)]) {
      const FeatureVector& f = inst.features;
      out << d << " " << to_string(inst.label);
      auto emit = [&](double x) {
        std::snprintf(buf, sizeof buf, " %.17g", x);
        out << buf;
      };
      for (int i = 0; i < kFeatureDim; ++i) emit(f[i]);
      for (int i = 0; i < 6; ++i) emit(inst.impulse[i]);
      for (int i = 0; i < inst.friction_impulse.size(); ++i) emit(inst.friction_impulse[i]);
      out << "\n";
    }
  }
}

ContactDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path);
  std::string line;
  if (!std::getline(in, line) || line.size() < 2 || line[0] != '#') {
    throw DataError("dataset missing metadata line: " + path);
  }
  json meta = json::parse(line.substr(1), nullptr, false);
  if (meta.is_discarded() || meta.value("format", "") != "patchsim-dataset") {
    throw DataError("not a dataset file: " + path);
  }
  ContactDataset ds;
  ds.meta.shape = meta.value("shape", "box");
  ds.meta.mu_x = meta.value("mu_x", 1.0);
  ds.meta.mu_z = meta.value("mu_z", 1.0);
  ds.meta.h = meta.value("h", kDefaultTimeStep);
  ds.meta.seed = meta.value("seed", std::uint64_t(0));
  ds.meta.n_throws = meta.value("n_throws", 0);
  ds.meta.failed_throws = meta.value("failed_throws", 0);

  // Records carry the already-encoded features, which is what training
  // consumes; the state/patch fields are reconstructed from them for
  // inspection tools.
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int dim;
    std::string label;
    if (!(ss >> dim >> label)) throw DataError("bad dataset record");
    if (dim < 0 || dim > 2) throw DataError("bad dimensionality in dataset record");
    FeatureVector f;
    for (int i = 0; i < kFeatureDim; ++i) {
      if (!(ss >> f[i])) throw DataError("bad feature block in dataset record");
    }
    ContactInstance inst;
    for (int i = 0; i < 6; ++i) {
      if (!(ss >> inst.impulse[i])) throw DataError("bad impulse block in dataset record");
    }
    const int k = friction_dof(dim);
    inst.friction_impulse.resize(k);
    for (int i = 0; i < k; ++i) {
      if (!(ss >> inst.friction_impulse[i])) {
        throw DataError("bad friction target in dataset record");
      }
    }
    inst.label = contact_state_from_string(label);
    inst.features = f;
    // Rebuild a state/patch pair consistent with the stored features.
    Mat3 R;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) R(r, c) = f[3 * r + c];
    }
    inst.state_before.orientation = Quat(R).normalized();
    inst.state_before.position = Vec3::Zero();
    inst.qdot1 = f.segment<6>(9);
    inst.state_before.gen_velocity = inst.qdot1;
    inst.patch.dimensionality = dim;
    inst.patch.centroid = R * f.segment<3>(15);
    inst.patch.points_world = {inst.patch.centroid};
    inst.patch.vertex_indices = {0};
    ds.by_dim[std::size_t(dim)].push_back(std::move(inst));
  }
  return ds;
}

MatX feature_matrix(const std::vector<ContactInstance>& instances) {
  MatX X(kFeatureDim, instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    X.col(int(i)) = instances[i].features;
  }
  return X;
}

std::vector<int> label_vector(const std::vector<ContactInstance>& instances) {
  std::vector<int> y(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) y[i] = int(instances[i].label);
  return y;
}

MatX friction_target_matrix(const std::vector<ContactInstance>& instances) {
  if (instances.empty()) return MatX();
  MatX Y(instances[0].friction_impulse.size(), instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) Y.col(int(i)) = instances[i].friction_impulse;
  return Y;
}

MatX impulse_target_matrix(const std::vector<ContactInstance>& instances) {
  MatX Y(6, instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) Y.col(int(i)) = instances[i].impulse;
  return Y;
}

std::vector<ContactInstance> filter_by_label(const std::vector<ContactInstance>& instances,
                                             ContactState label) {
  std::vector<ContactInstance> out;
  for (const auto& inst : instances) {
    if (inst.label == label) out.push_back(inst);
  }
  return out;
}

}  // namespace patchsim
