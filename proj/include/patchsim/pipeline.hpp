#pragma once

#include "patchsim/augmented.hpp"
#include "patchsim/dataset.hpp"
#include "patchsim/mlp.hpp"

namespace patchsim {

/// Per-dimensionality training statistics.
struct ModelTrainStats {
  bool trained = false;
  int n_instances = 0;
  double classifier_accuracy = 0.0;
  double regressor_nrmse = 0.0;
  double regressor_r2 = 0.0;
  int regressor_instances = 0;
};

struct PipelineTrainReport {
  std::array<ModelTrainStats, 3> by_dim;
};

/// Trains one classifier on every instance of each nonempty partition and
/// one regressor on its dynamic instances. Seeds are derived per model from
/// cfg.seed, so the whole set is reproducible. Throws DataError when a
/// nonempty partition lacks a label class or has no dynamic instances.
ContactModelSet train_contact_models(const ContactDataset& ds, const TrainConfig& cfg,
                                     PipelineTrainReport* report = nullptr);

/// Trains the purely data-driven baseline: per partition, one regressor from
/// features to the full 6-vector impulse.
PddModelSet train_pdd_models(const ContactDataset& ds, const TrainConfig& cfg,
                             PipelineTrainReport* report = nullptr);

}  // namespace patchsim
