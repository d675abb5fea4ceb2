#include "patchsim/pipeline.hpp"

namespace patchsim {

ContactModelSet train_contact_models(const ContactDataset& ds, const TrainConfig& cfg,
                                     PipelineTrainReport* report) {
  ContactModelSet set;
  for (int dim = 0; dim < 3; ++dim) {
    const auto& part = ds.partition(dim);
    ModelTrainStats stats;
    stats.n_instances = int(part.size());
    if (!part.empty()) {
      TrainConfig ccfg = cfg;
      ccfg.seed = derive_seed(cfg.seed, std::uint64_t(2 * dim));
      const TrainResult cls =
          train_classifier(feature_matrix(part), label_vector(part), 3, ccfg);
      stats.classifier_accuracy = cls.holdout_accuracy;
      set.classifier[std::size_t(dim)] = cls.model;

      const auto dynamic = filter_by_label(part, ContactState::kDynamic);
      if (dynamic.empty()) {
        throw DataError("train_contact_models: no dynamic instances for dimensionality " +
                        std::to_string(dim));
      }
      TrainConfig rcfg = cfg;
      rcfg.seed = derive_seed(cfg.seed, std::uint64_t(2 * dim + 1));
      const TrainResult reg =
          train_regressor(feature_matrix(dynamic), friction_target_matrix(dynamic), rcfg);
      stats.regressor_nrmse = reg.holdout_nrmse;
      stats.regressor_r2 = reg.holdout_r2;
      stats.regressor_instances = int(dynamic.size());
      set.regressor[std::size_t(dim)] = reg.model;
      stats.trained = true;
    }
    if (report) report->by_dim[std::size_t(dim)] = stats;
  }
  return set;
}

PddModelSet train_pdd_models(const ContactDataset& ds, const TrainConfig& cfg,
                             PipelineTrainReport* report) {
  PddModelSet set;
  for (int dim = 0; dim < 3; ++dim) {
    const auto& part = ds.partition(dim);
    ModelTrainStats stats;
    stats.n_instances = int(part.size());
    if (!part.empty()) {
      TrainConfig rcfg = cfg;
      rcfg.seed = derive_seed(cfg.seed, std::uint64_t(100 + dim));
      const TrainResult reg =
          train_regressor(feature_matrix(part), impulse_target_matrix(part), rcfg);
      stats.regressor_nrmse = reg.holdout_nrmse;
      stats.regressor_r2 = reg.holdout_r2;
      stats.regressor_instances = int(part.size());
      set.regressor[std::size_t(dim)] = reg.model;
      stats.trained = true;
    }
    if (report) report->by_dim[std::size_t(dim)] = stats;
  }
  return set;
}

}  // namespace patchsim
