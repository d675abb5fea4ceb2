#pragma once

#include <string>
#include <vector>

#include "patchsim/types.hpp"

namespace patchsim {

enum class OutputHead { kSoftmax, kLinear };

/// Feed-forward network with tanh hidden layers. Normalization statistics
/// travel with the weights so a saved model is self-contained.
struct MlpModel {
  std::vector<int> layer_sizes;  // input, hidden..., output
  std::vector<MatX> weights;     // weights[l]: sizes[l+1] x sizes[l]
  std::vector<VecX> biases;
  OutputHead head = OutputHead::kLinear;

  VecX in_mean, in_std;    // feature z-score stats (training split)
  VecX out_mean, out_std;  // target stats, linear head only

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }

  /// Checks that consecutive layer dimensions chain and weights are finite.
  void validate() const;
};

/// Zero-initialized model of the given architecture with identity
/// normalization stats.
MlpModel make_mlp(const std::vector<int>& layer_sizes, OutputHead head);

/// Raw network evaluation (no input/output normalization). The softmax head
/// returns a probability vector. Throws DataError on dimension mismatch.
VecX mlp_forward(const MlpModel& model, const VecX& x);

/// Batched evaluation, one sample per column.
MatX mlp_forward_batch(const MlpModel& model, const MatX& X);

/// Normalizes inputs, evaluates, de-normalizes linear outputs.
VecX mlp_predict(const MlpModel& model, const VecX& x);

/// JSON (de)serialization with a format version; load rejects models whose
/// dimensions do not chain.
void save_mlp(const MlpModel& model, const std::string& path);
MlpModel load_mlp(const std::string& path);
std::string mlp_to_json(const MlpModel& model);
MlpModel mlp_from_json(const std::string& text);

// --- training ---------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 256;
  int epochs = 200;
  double validation_fraction = 0.1;
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 1;
};

struct TrainResult {
  MlpModel model;
  int n_train = 0;
  int n_holdout = 0;
  double holdout_accuracy = 0.0;  // classifier
  double holdout_nrmse = 0.0;     // regressor, per-dim z-scored RMSE
  double holdout_r2 = 0.0;        // regressor
};

/// Mini-batch Adam on softmax cross-entropy. X is one sample per column,
/// labels in [0, n_classes). Throws DataError when a class is absent.
TrainResult train_classifier(const MatX& X, const std::vector<int>& labels,
                             int n_classes, const TrainConfig& cfg);

/// Mini-batch Adam on MSE over z-scored targets, one sample per column.
TrainResult train_regressor(const MatX& X, const MatX& Y, const TrainConfig& cfg);

/// Loss and parameter gradients on a batch, for optimization and gradient
/// checks. Labels are used for the softmax head, targets for the linear head.
double mlp_loss_grad(const MlpModel& model, const MatX& X,
                     const std::vector<int>& labels, const MatX& targets,
                     std::vector<MatX>& dW, std::vector<VecX>& db);

}  // namespace patchsim
