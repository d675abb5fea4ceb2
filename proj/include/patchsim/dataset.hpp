#pragma once

#include <array>
#include <string>
#include <vector>

#include "patchsim/rng.hpp"
#include "patchsim/simulate.hpp"

namespace patchsim {

/// Initial-state distribution for training/evaluation throws.
struct ThrowConfig {
  double height_min = 0.2, height_max = 1.0;   // m above the ground
  double speed_min = 0.0, speed_max = 3.0;     // m/s, direction biased downward
  double angvel_min = 0.0, angvel_max = 2.0 * M_PI;  // rad/s, random axis
  int steps = 800;
  double h = kDefaultTimeStep;
  std::uint64_t seed = 0;

  void validate() const;

  /// Strict sub-ranges of the defaults, for test-time throws.
  static ThrowConfig test_ranges();
};

/// Draws one initial state: uniform orientation, height in range (measured
/// as clearance of the lowest vertex), speed along a downward-biased random
/// direction, angular velocity about a random axis.
RigidBodyState sample_initial_state(const ThrowConfig& cfg, const ConvexShape& shape,
                                    const GroundPlane& ground, Rng& rng);

struct DatasetMeta {
  std::string shape = "box";
  double mu_x = 1.0, mu_z = 1.0;
  double h = kDefaultTimeStep;
  std::uint64_t seed = 0;
  int n_throws = 0;
  int failed_throws = 0;
};

/// Labeled contact instances partitioned by patch dimensionality.
struct ContactDataset {
  DatasetMeta meta;
  std::array<std::vector<ContactInstance>, 3> by_dim;

  int total() const {
    return int(by_dim[0].size() + by_dim[1].size() + by_dim[2].size());
  }
  const std::vector<ContactInstance>& partition(int dim) const {
    return by_dim[std::size_t(dim)];
  }
};

/// Runs n_throws ground-truth trajectories and extracts every contact
/// instance. Deterministic given cfg.seed; failed throws are skipped and
/// counted.
ContactDataset generate_dataset(const ThrowConfig& cfg, const BodyModel& model,
                                const GroundPlane& ground, int n_throws);

/// Line-delimited dataset file. First line: '#' + JSON metadata. Each record:
/// dim label features(21) impulse(6) target(2-3).
void save_dataset(const ContactDataset& ds, const std::string& path);
ContactDataset load_dataset(const std::string& path);

/// Feature matrix (one column per instance) and labels/targets for training.
MatX feature_matrix(const std::vector<ContactInstance>& instances);
std::vector<int> label_vector(const std::vector<ContactInstance>& instances);
MatX friction_target_matrix(const std::vector<ContactInstance>& instances);
MatX impulse_target_matrix(const std::vector<ContactInstance>& instances);

/// Instances with a given label.
std::vector<ContactInstance> filter_by_label(const std::vector<ContactInstance>& instances,
                                             ContactState label);

}  // namespace patchsim
