#include "patchsim/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "patchsim/rng.hpp"

namespace patchsim {

void MlpModel::validate() const {
  if (layer_sizes.size() < 2) throw DataError("mlp: need at least input and output layers");
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
    throw DataError("mlp: weight count does not match layer count");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l]) {
      throw DataError("mlp: layer dimensions do not chain");
    }
    if (biases[l].size() != layer_sizes[l + 1]) throw DataError("mlp: bias size mismatch");
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw DataError("mlp: non-finite parameters");
    }
  }
  if (head == OutputHead::kSoftmax && layer_sizes.back() < 2) {
    throw DataError("mlp: softmax head needs at least 2 outputs");
  }
}

MlpModel make_mlp(const std::vector<int>& layer_sizes, OutputHead head) {
  MlpModel m;
  m.layer_sizes = layer_sizes;
  m.head = head;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    m.weights.push_back(MatX::Zero(layer_sizes[l + 1], layer_sizes[l]));
    m.biases.push_back(VecX::Zero(layer_sizes[l + 1]));
  }
  m.in_mean = VecX::Zero(layer_sizes.front());
  m.in_std = VecX::Ones(layer_sizes.front());
  m.out_mean = VecX::Zero(layer_sizes.back());
  m.out_std = VecX::Ones(layer_sizes.back());
  m.validate();
  return m;
}

namespace {

MatX softmax_cols(MatX z) {
  for (int c = 0; c < z.cols(); ++c) {
    z.col(c).array() -= z.col(c).maxCoeff();
    z.col(c) = z.col(c).array().exp();
    z.col(c) /= z.col(c).sum();
  }
  return z;
}

}  // namespace

MatX mlp_forward_batch(const MlpModel& model, const MatX& X) {
  if (X.rows() != model.input_dim()) {
    throw DataError("mlp_forward: input dimension mismatch");
  }
  MatX a = X;
  const std::size_t L = model.weights.size();
  for (std::size_t l = 0; l < L; ++l) {
    MatX z = (model.weights[l] * a).colwise() + model.biases[l];
    a = (l + 1 < L) ? MatX(z.array().tanh()) : std::move(z);
  }
  if (model.head == OutputHead::kSoftmax) a = softmax_cols(std::move(a));
  return a;
}

VecX mlp_forward(const MlpModel& model, const VecX& x) {
  return mlp_forward_batch(model, x);
}

VecX mlp_predict(const MlpModel& model, const VecX& x) {
  if (x.size() != model.input_dim()) throw DataError("mlp_predict: input dimension mismatch");
  const VecX xn = (x - model.in_mean).cwiseQuotient(model.in_std);
  VecX y = mlp_forward(model, xn);
  if (model.head == OutputHead::kLinear) {
    y = y.cwiseProduct(model.out_std) + model.out_mean;
  }
  return y;
}

// --- serialization ----------------------------------------------------------

namespace {

using nlohmann::json;

json vec_to_json(const VecX& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VecX vec_from_json(const json& a) {
  VecX v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[int(i)] = a[i].get<double>();
  return v;
}

}  // namespace

std::string mlp_to_json(const MlpModel& model) {
  json j;
  j["format"] = "patchsim-mlp";
  j["version"] = 1;
  j["layer_sizes"] = model.layer_sizes;
  j["head"] = model.head == OutputHead::kSoftmax ? "softmax" : "linear";
  j["in_mean"] = vec_to_json(model.in_mean);
  j["in_std"] = vec_to_json(model.in_std);
  j["out_mean"] = vec_to_json(model.out_mean);
  j["out_std"] = vec_to_json(model.out_std);
  json ws = json::array(), bs = json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    json w = json::array();
    for (int r = 0; r < model.weights[l].rows(); ++r) {
      w.push_back(vec_to_json(model.weights[l].row(r).transpose()));
    }
    ws.push_back(w);
    bs.push_back(vec_to_json(model.biases[l]));
  }
  j["weights"] = ws;
  j["biases"] = bs;
  return j.dump(1);
}

MlpModel mlp_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("mlp: bad json: ") + e.what());
  }
  if (j.value("format", "") != "patchsim-mlp") throw DataError("mlp: not a model file");
  if (j.value("version", 0) != 1) throw DataError("mlp: unsupported model version");
  MlpModel m;
  m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  m.head = j.at("head").get<std::string>() == "softmax" ? OutputHead::kSoftmax
                                                        : OutputHead::kLinear;
  m.in_mean = vec_from_json(j.at("in_mean"));
  m.in_std = vec_from_json(j.at("in_std"));
  m.out_mean = vec_from_json(j.at("out_mean"));
  m.out_std = vec_from_json(j.at("out_std"));
  const auto& ws = j.at("weights");
  const auto& bs = j.at("biases");
  for (std::size_t l = 0; l < ws.size(); ++l) {
    const auto& w = ws[l];
    if (w.empty()) throw DataError("mlp: empty weight matrix");
    MatX W(w.size(), w[0].size());
    for (std::size_t r = 0; r < w.size(); ++r) {
      if (w[r].size() != w[0].size()) throw DataError("mlp: ragged weight matrix");
      for (std::size_t c = 0; c < w[r].size(); ++c) W(int(r), int(c)) = w[r][c].get<double>();
    }
    m.weights.push_back(std::move(W));
    m.biases.push_back(vec_from_json(bs[l]));
  }
  m.validate();
  if (m.in_mean.size() != m.input_dim() || m.out_mean.size() != m.output_dim()) {
    throw DataError("mlp: normalization stats do not match layer sizes");
  }
  return m;
}

void save_mlp(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path);
  out << mlp_to_json(model) << "\n";
}

MlpModel load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return mlp_from_json(ss.str());
}

// --- training ---------------------------------------------------------------

double mlp_loss_grad(const MlpModel& model, const MatX& X,
                     const std::vector<int>& labels, const MatX& targets,
                     std::vector<MatX>& dW, std::vector<VecX>& db) {
  const int B = int(X.cols());
  const std::size_t L = model.weights.size();
  std::vector<MatX> acts(L + 1);
  acts[0] = X;
  for (std::size_t l = 0; l < L; ++l) {
    MatX z = (model.weights[l] * acts[l]).colwise() + model.biases[l];
    acts[l + 1] = (l + 1 < L) ? MatX(z.array().tanh()) : std::move(z);
  }

  double loss = 0.0;
  MatX delta;  // dLoss/dz at the output layer
  if (model.head == OutputHead::kSoftmax) {
    MatX probs = softmax_cols(acts[L]);
    for (int c = 0; c < B; ++c) {
      loss -= std::log(std::max(probs(labels[std::size_t(c)], c), 1e-300));
      probs(labels[std::size_t(c)], c) -= 1.0;
    }
    loss /= B;
    delta = probs / double(B);
  } else {
    const MatX err = acts[L] - targets;
    loss = 0.5 * err.squaredNorm() / B;
    delta = err / double(B);
  }

  dW.assign(L, MatX());
  db.assign(L, VecX());
  for (std::size_t l = L; l-- > 0;) {
    dW[l].noalias() = delta * acts[l].transpose();
    db[l] = delta.rowwise().sum();
    if (l > 0) {
      MatX back = model.weights[l].transpose() * delta;
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return loss;
}

namespace {

struct AdamState {
  std::vector<MatX> mW, vW;
  std::vector<VecX> mb, vb;
  int t = 0;
};

void adam_step(MlpModel& model, const std::vector<MatX>& dW,
               const std::vector<VecX>& db, AdamState& s, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (s.mW.empty()) {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      s.mW.push_back(MatX::Zero(model.weights[l].rows(), model.weights[l].cols()));
      s.vW.push_back(MatX::Zero(model.weights[l].rows(), model.weights[l].cols()));
      s.mb.push_back(VecX::Zero(model.biases[l].size()));
      s.vb.push_back(VecX::Zero(model.biases[l].size()));
    }
  }
  ++s.t;
  const double corr = std::sqrt(1.0 - std::pow(b2, s.t)) / (1.0 - std::pow(b1, s.t));
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    s.mW[l] = b1 * s.mW[l] + (1.0 - b1) * dW[l];
    s.vW[l] = b2 * s.vW[l] + (1.0 - b2) * dW[l].cwiseProduct(dW[l]);
    model.weights[l].array() -=
        lr * corr * s.mW[l].array() / (s.vW[l].array().sqrt() + eps);
    s.mb[l] = b1 * s.mb[l] + (1.0 - b1) * db[l];
    s.vb[l] = b2 * s.vb[l] + (1.0 - b2) * db[l].cwiseProduct(db[l]);
    model.biases[l].array() -=
        lr * corr * s.mb[l].array() / (s.vb[l].array().sqrt() + eps);
  }
}

MlpModel init_model(int in_dim, int out_dim, const TrainConfig& cfg,
                    OutputHead head, Rng& rng) {
  std::vector<int> sizes;
  sizes.push_back(in_dim);
  for (int hdim : cfg.hidden) sizes.push_back(hdim);
  sizes.push_back(out_dim);
  MlpModel m = make_mlp(sizes, head);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const double bound = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
    for (int r = 0; r < m.weights[l].rows(); ++r) {
      for (int c = 0; c < m.weights[l].cols(); ++c) {
        m.weights[l](r, c) = uniform(rng, -bound, bound);
      }
    }
  }
  return m;
}

struct Split {
  std::vector<int> train, holdout;
};

Split split_indices(int n, double validation_fraction, Rng& rng) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw DataError("train: validation fraction must be in (0,1)");
  }
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::iota(idx.begin(), idx.end(), 0);
  shuffle(idx, rng);
  int n_hold = int(std::floor(validation_fraction * n));
  if (n > 1 && n_hold == 0) n_hold = 1;
  Split s;
  s.holdout.assign(idx.begin(), idx.begin() + n_hold);
  s.train.assign(idx.begin() + n_hold, idx.end());
  return s;
}

void fit_normalization(const MatX& X, const std::vector<int>& cols, VecX& mean,
                       VecX& stdev) {
  mean = VecX::Zero(X.rows());
  for (int c : cols) mean += X.col(c);
  mean /= double(cols.size());
  VecX var = VecX::Zero(X.rows());
  for (int c : cols) var += (X.col(c) - mean).cwiseAbs2();
  var /= double(cols.size());
  stdev = var.cwiseSqrt();
  for (int i = 0; i < stdev.size(); ++i) {
    if (stdev[i] < 1e-12) stdev[i] = 1.0;
  }
}

MatX gather(const MatX& X, const std::vector<int>& cols) {
  MatX out(X.rows(), cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(int(i)) = X.col(cols[i]);
  return out;
}

void run_epochs(MlpModel& model, const MatX& Xn, const std::vector<int>& labels,
                const MatX& Yn, const std::vector<int>& train_idx,
                const TrainConfig& cfg, Rng& rng) {
  AdamState adam;
  std::vector<MatX> dW;
  std::vector<VecX> db;
  std::vector<int> order = train_idx;
  const int B = std::max(1, cfg.batch_size);
  MatX bx(Xn.rows(), B), by;
  std::vector<int> bl;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += std::size_t(B)) {
      const int nb = int(std::min(order.size() - start, std::size_t(B)));
      bx.resize(Xn.rows(), nb);
      if (model.head == OutputHead::kSoftmax) {
        bl.resize(std::size_t(nb));
      } else {
        by.resize(Yn.rows(), nb);
      }
      for (int i = 0; i < nb; ++i) {
        const int c = order[start + std::size_t(i)];
        bx.col(i) = Xn.col(c);
        if (model.head == OutputHead::kSoftmax) {
          bl[std::size_t(i)] = labels[std::size_t(c)];
        } else {
          by.col(i) = Yn.col(c);
        }
      }
      mlp_loss_grad(model, bx, bl, by, dW, db);
      adam_step(model, dW, db, adam, cfg.learning_rate);
    }
  }
}

}  // namespace

TrainResult train_classifier(const MatX& X, const std::vector<int>& labels,
                             int n_classes, const TrainConfig& cfg) {
  const int n = int(X.cols());
  if (n == 0 || labels.size() != std::size_t(n)) {
    throw DataError("train_classifier: empty or mismatched dataset");
  }
  Rng rng(cfg.seed);
  const Split split = split_indices(n, cfg.validation_fraction, rng);

  // With zero restitution some partitions legitimately never see one of the
  // classes (a resting face cannot detach), so only a single-class split is
  // degenerate.
  std::set<int> train_classes;
  for (int i : split.train) train_classes.insert(labels[std::size_t(i)]);
  if (train_classes.size() < 2) {
    throw DataError("train_classifier: degenerate dataset, fewer than two label classes");
  }

  MlpModel model = init_model(int(X.rows()), n_classes, cfg, OutputHead::kSoftmax, rng);
  fit_normalization(X, split.train, model.in_mean, model.in_std);
  MatX Xn = X;
  for (int c = 0; c < n; ++c) {
    Xn.col(c) = (X.col(c) - model.in_mean).cwiseQuotient(model.in_std);
  }
  run_epochs(model, Xn, labels, MatX(), split.train, cfg, rng);

  TrainResult out;
  out.n_train = int(split.train.size());
  out.n_holdout = int(split.holdout.size());
  int correct = 0;
  const MatX probs = mlp_forward_batch(model, gather(Xn, split.holdout));
  for (std::size_t i = 0; i < split.holdout.size(); ++i) {
    int arg = 0;
    for (int k = 1; k < n_classes; ++k) {
      if (probs(k, int(i)) > probs(arg, int(i))) arg = k;
    }
    if (arg == labels[std::size_t(split.holdout[i])]) ++correct;
  }
  out.holdout_accuracy =
      split.holdout.empty() ? 1.0 : double(correct) / double(split.holdout.size());
  out.model = std::move(model);
  return out;
}

TrainResult train_regressor(const MatX& X, const MatX& Y, const TrainConfig& cfg) {
  const int n = int(X.cols());
  if (n == 0 || Y.cols() != n) {
    throw DataError("train_regressor: empty or mismatched dataset");
  }
  Rng rng(cfg.seed);
  const Split split = split_indices(n, cfg.validation_fraction, rng);

  MlpModel model = init_model(int(X.rows()), int(Y.rows()), cfg, OutputHead::kLinear, rng);
  fit_normalization(X, split.train, model.in_mean, model.in_std);
  fit_normalization(Y, split.train, model.out_mean, model.out_std);
  MatX Xn = X, Yn = Y;
  for (int c = 0; c < n; ++c) {
    Xn.col(c) = (X.col(c) - model.in_mean).cwiseQuotient(model.in_std);
    Yn.col(c) = (Y.col(c) - model.out_mean).cwiseQuotient(model.out_std);
  }
  run_epochs(model, Xn, {}, Yn, split.train, cfg, rng);

  TrainResult out;
  out.n_train = int(split.train.size());
  out.n_holdout = int(split.holdout.size());
  if (!split.holdout.empty()) {
    const MatX Yh = gather(Yn, split.holdout);
    const MatX pred = mlp_forward_batch(model, gather(Xn, split.holdout));
    const MatX err = pred - Yh;
    out.holdout_nrmse = std::sqrt(err.squaredNorm() / double(err.size()));
    const VecX mean = Yh.rowwise().mean();
    const double sst = (Yh.colwise() - mean).squaredNorm();
    out.holdout_r2 = sst > 0.0 ? 1.0 - err.squaredNorm() / sst : 1.0;
  }
  out.model = std::move(model);
  return out;
}

}  // namespace patchsim
