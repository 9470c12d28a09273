// src/dnn.cc

// Copyright 2026  LRFuse Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "lrfuse/dnn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lrfuse/io.h"
#include "lrfuse/parallel.h"
#include "lrfuse/rng.h"

namespace lrfuse {

namespace {

constexpr double kScoreCap = 30.0;

double StableSigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Affine + sigmoid for all hidden layers, then affine for the output layer;
// returns the output-layer pre-activations (logits) and optionally keeps the
// post-sigmoid hidden activations for backpropagation.
RowMatrix ForwardLogits(const DnnModel& model, const RowMatrix& x,
                        std::vector<RowMatrix>* hidden) {
  if (hidden != nullptr) hidden->clear();
  RowMatrix a = x;
  const int layers = model.NumAffineLayers();
  for (int l = 0; l + 1 < layers; ++l) {
    RowMatrix z = a * model.weights[static_cast<size_t>(l)].transpose();
    z.rowwise() += model.biases[static_cast<size_t>(l)].transpose();
    a = z.unaryExpr([](double v) { return StableSigmoid(v); });
    if (hidden != nullptr) hidden->push_back(a);
  }
  RowMatrix z = a * model.weights.back().transpose();
  z.rowwise() += model.biases.back().transpose();
  return z;
}

// Row-wise softmax with max-shift; also returns per-row log-sum-exp so
// callers can form log-posteriors without a second pass.
RowMatrix SoftmaxRows(const RowMatrix& logits, Vector* lse_out) {
  Vector mx = logits.rowwise().maxCoeff();
  RowMatrix shifted = logits.colwise() - mx;
  RowMatrix e = shifted.array().exp().matrix();
  Vector sums = e.rowwise().sum();
  if (lse_out != nullptr)
    *lse_out = (mx.array() + sums.array().log()).matrix();
  return (e.array().colwise() / sums.array()).matrix();
}

std::vector<int> LabelIndices(const DnnModel& model, const Corpus& data) {
  std::vector<int> idx(data.records.size());
  for (size_t i = 0; i < data.records.size(); ++i) {
    const IVectorRecord& rec = data.records[i];
    if (!rec.labeled())
      throw DomainError("dnn: unlabeled record '" + rec.id + "'");
    const auto it = std::find(model.languages.begin(), model.languages.end(),
                              rec.label);
    if (it == model.languages.end())
      throw DomainError("dnn: label '" + rec.label +
                        "' is not among the model's languages");
    idx[i] = static_cast<int>(it - model.languages.begin());
  }
  return idx;
}

RowMatrix StackRows(const Corpus& data, const std::vector<size_t>& which) {
  RowMatrix x(static_cast<Eigen::Index>(which.size()), data.dim);
  for (size_t i = 0; i < which.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = data.records[which[i]].vec.transpose();
  return x;
}

}  // namespace

void DnnModel::Validate() const {
  if (layer_dims.size() < 2)
    throw DomainError("dnn: need at least an input and an output layer");
  for (int dim : layer_dims)
    if (dim < 1) throw DomainError("dnn: layer sizes must be positive");
  if (weights.size() + 1 != layer_dims.size() ||
      biases.size() != weights.size())
    throw DimensionError("dnn: parameter count does not match layer_dims");
  for (size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_dims[l + 1] ||
        weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1])
      throw DimensionError("dnn: parameter shape mismatch at layer " +
                           std::to_string(l));
    if (!weights[l].allFinite() || !biases[l].allFinite())
      throw NumericError("dnn: non-finite parameters at layer " +
                         std::to_string(l));
  }
  if (!languages.empty() &&
      static_cast<int>(languages.size()) != layer_dims.back())
    throw DimensionError("dnn: language list does not match output size");
}

void DnnModel::Save(const std::string& path) const {
  Validate();
  ModelWriter writer(path, "dnn");
  Vector dims(static_cast<Eigen::Index>(layer_dims.size()));
  for (size_t i = 0; i < layer_dims.size(); ++i)
    dims[static_cast<Eigen::Index>(i)] = layer_dims[i];
  writer.Vec("layer_dims", dims);
  for (size_t l = 0; l < weights.size(); ++l) {
    writer.Mat("weights_" + std::to_string(l), weights[l]);
    writer.Vec("biases_" + std::to_string(l), biases[l]);
  }
  writer.Strings("languages", languages);
  writer.Close();
}

DnnModel DnnModel::Load(const std::string& path) {
  ModelReader reader(path, "dnn");
  DnnModel model;
  const Vector dims = reader.GetVector("layer_dims");
  for (Eigen::Index i = 0; i < dims.size(); ++i)
    model.layer_dims.push_back(static_cast<int>(dims[i]));
  for (size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
    model.weights.push_back(reader.GetMatrix("weights_" + std::to_string(l)));
    model.biases.push_back(reader.GetVector("biases_" + std::to_string(l)));
  }
  model.languages = reader.GetStrings("languages");
  model.Validate();
  return model;
}

void DnnTrainConfig::Validate() const {
  if (learning_rate < 0.0) throw DomainError("dnn: negative learning rate");
  if (momentum < 0.0 || momentum >= 1.0)
    throw DomainError("dnn: momentum must lie in [0, 1)");
  if (batch_size < 1) throw DomainError("dnn: batch size must be positive");
  if (epochs < 1) throw DomainError("dnn: epoch count must be positive");
  if (l2 < 0.0) throw DomainError("dnn: negative weight decay");
  if (patience < 1) throw DomainError("dnn: patience must be positive");
  if (!(validation_fraction > 0.0) || validation_fraction > 0.5)
    throw DomainError("dnn: validation fraction must lie in (0, 0.5]");
}

DnnModel InitDnn(const std::vector<int>& layer_dims, uint64_t seed) {
  if (layer_dims.size() < 2)
    throw DomainError("dnn: need at least an input and an output layer");
  for (int dim : layer_dims)
    if (dim < 1) throw DomainError("dnn: layer sizes must be positive");
  DnnModel model;
  model.layer_dims = layer_dims;
  Rng rng(seed);
  for (size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    RowMatrix w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        w(i, j) = rng.Uniform(-limit, limit);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(fan_out));
  }
  return model;
}

double DnnLossAndGradients(const DnnModel& model, const RowMatrix& x,
                           const std::vector<int>& labels, double l2,
                           std::vector<RowMatrix>* grad_w,
                           std::vector<Vector>* grad_b) {
  const Eigen::Index n = x.rows();
  if (n < 1) throw DomainError("dnn: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw DimensionError("dnn: label count does not match batch rows");

  std::vector<RowMatrix> hidden;
  RowMatrix logits = ForwardLogits(model, x, &hidden);
  Vector lse;
  RowMatrix probs = SoftmaxRows(logits, &lse);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    loss += lse[i] - logits(i, labels[static_cast<size_t>(i)]);
  loss /= static_cast<double>(n);

  const int layers = model.NumAffineLayers();
  grad_w->assign(static_cast<size_t>(layers), RowMatrix());
  grad_b->assign(static_cast<size_t>(layers), Vector());

  // Output delta: (softmax - onehot) / n.
  RowMatrix delta = probs;
  for (Eigen::Index i = 0; i < n; ++i)
    delta(i, labels[static_cast<size_t>(i)]) -= 1.0;
  delta /= static_cast<double>(n);

  for (int l = layers - 1; l >= 0; --l) {
    const RowMatrix& input =
        l == 0 ? x : hidden[static_cast<size_t>(l - 1)];
    (*grad_w)[static_cast<size_t>(l)] = delta.transpose() * input;
    (*grad_b)[static_cast<size_t>(l)] = delta.colwise().sum().transpose();
    if (l2 > 0.0) {
      (*grad_w)[static_cast<size_t>(l)] +=
          l2 * model.weights[static_cast<size_t>(l)];
      loss += 0.5 * l2 * model.weights[static_cast<size_t>(l)].squaredNorm();
    }
    if (l > 0) {
      const RowMatrix& h = hidden[static_cast<size_t>(l - 1)];
      RowMatrix back = delta * model.weights[static_cast<size_t>(l)];
      delta = (back.array() * h.array() * (1.0 - h.array())).matrix();
    }
  }
  return loss;
}

DnnModel TrainDnn(const DnnModel& model, const Corpus& train,
                  const DnnTrainConfig& cfg, DnnTrainReport* report) {
  cfg.Validate();
  model.Validate();
  if (model.languages.empty())
    throw DomainError("dnn: model has no language list; set it before training");
  if (train.dim != model.InputDim())
    throw DimensionError("dnn: corpus dimension does not match input layer");
  const size_t n = train.records.size();
  if (n < 2) throw DomainError("dnn: need at least 2 records to train");

  const std::vector<int> all_labels = LabelIndices(model, train);

  // Deterministic validation split.
  Rng rng(cfg.seed);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  rng.Shuffle(&order);
  size_t n_val = static_cast<size_t>(
      std::ceil(cfg.validation_fraction * static_cast<double>(n)));
  n_val = std::max<size_t>(1, std::min(n_val, n - 1));
  std::vector<size_t> val_idx(order.begin(),
                              order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<size_t> train_idx(
      order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  RowMatrix x_val = StackRows(train, val_idx);
  std::vector<int> y_val(val_idx.size());
  for (size_t i = 0; i < val_idx.size(); ++i)
    y_val[i] = all_labels[val_idx[i]];
  RowMatrix x_train = StackRows(train, train_idx);
  std::vector<int> y_train(train_idx.size());
  for (size_t i = 0; i < train_idx.size(); ++i)
    y_train[i] = all_labels[train_idx[i]];

  DnnModel current = model;
  const int layers = current.NumAffineLayers();
  std::vector<RowMatrix> vel_w;
  std::vector<Vector> vel_b;
  for (int l = 0; l < layers; ++l) {
    vel_w.push_back(RowMatrix::Zero(current.weights[static_cast<size_t>(l)].rows(),
                                    current.weights[static_cast<size_t>(l)].cols()));
    vel_b.push_back(Vector::Zero(current.biases[static_cast<size_t>(l)].size()));
  }

  auto mean_loss = [&](const RowMatrix& x, const std::vector<int>& y) {
    Vector lse;
    RowMatrix logits = ForwardLogits(current, x, nullptr);
    SoftmaxRows(logits, &lse);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      loss += lse[i] - logits(i, y[static_cast<size_t>(i)]);
    return loss / static_cast<double>(x.rows());
  };

  if (report != nullptr) *report = DnnTrainReport();
  DnnModel best = current;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stale_epochs = 0;

  std::vector<size_t> batch_order(train_idx.size());
  std::iota(batch_order.begin(), batch_order.end(), size_t{0});
  std::vector<RowMatrix> grad_w;
  std::vector<Vector> grad_b;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.Shuffle(&batch_order);
    for (size_t start = 0; start < batch_order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t stop = std::min(batch_order.size(),
                                   start + static_cast<size_t>(cfg.batch_size));
      const Eigen::Index rows = static_cast<Eigen::Index>(stop - start);
      RowMatrix xb(rows, x_train.cols());
      std::vector<int> yb(static_cast<size_t>(rows));
      for (size_t i = start; i < stop; ++i) {
        xb.row(static_cast<Eigen::Index>(i - start)) =
            x_train.row(static_cast<Eigen::Index>(batch_order[i]));
        yb[i - start] = y_train[batch_order[i]];
      }
      const double batch_loss =
          DnnLossAndGradients(current, xb, yb, cfg.l2, &grad_w, &grad_b);
      if (!std::isfinite(batch_loss))
        throw NumericError(
            "dnn: training diverged at epoch " + std::to_string(epoch) +
            " with learning rate " + FormatFloat(cfg.learning_rate));
      for (int l = 0; l < layers; ++l) {
        vel_w[static_cast<size_t>(l)] =
            cfg.momentum * vel_w[static_cast<size_t>(l)] -
            cfg.learning_rate * grad_w[static_cast<size_t>(l)];
        vel_b[static_cast<size_t>(l)] =
            cfg.momentum * vel_b[static_cast<size_t>(l)] -
            cfg.learning_rate * grad_b[static_cast<size_t>(l)];
        current.weights[static_cast<size_t>(l)] += vel_w[static_cast<size_t>(l)];
        current.biases[static_cast<size_t>(l)] += vel_b[static_cast<size_t>(l)];
      }
    }
    const double train_loss = mean_loss(x_train, y_train);
    const double val_loss = mean_loss(x_val, y_val);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericError(
          "dnn: training diverged at epoch " + std::to_string(epoch) +
          " with learning rate " + FormatFloat(cfg.learning_rate));
    if (report != nullptr) {
      report->train_loss.push_back(train_loss);
      report->val_loss.push_back(val_loss);
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best = current;
      best_epoch = epoch;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (stale_epochs >= cfg.patience) {
        if (report != nullptr) report->early_stopped = true;
        break;
      }
    }
  }
  if (report != nullptr) report->best_epoch = best_epoch;
  return best;
}

Vector DnnPosteriors(const DnnModel& model, const Vector& v) {
  if (v.size() != model.InputDim())
    throw DimensionError("dnn: input dimension mismatch");
  RowMatrix x = v.transpose();
  RowMatrix logits = ForwardLogits(model, x, nullptr);
  RowMatrix probs = SoftmaxRows(logits, nullptr);
  return probs.row(0).transpose();
}

RowMatrix DnnPosteriorsBatch(const DnnModel& model, const RowMatrix& data) {
  if (data.cols() != model.InputDim())
    throw DimensionError("dnn: input dimension mismatch");
  const Eigen::Index n = data.rows();
  RowMatrix out(n, model.OutputDim());
  ParallelFor((n + kReduceBlock - 1) / kReduceBlock, [&](std::ptrdiff_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kReduceBlock;
    const Eigen::Index end =
        std::min<Eigen::Index>(begin + kReduceBlock, n);
    RowMatrix logits =
        ForwardLogits(model, data.middleRows(begin, end - begin), nullptr);
    out.middleRows(begin, end - begin) = SoftmaxRows(logits, nullptr);
  });
  return out;
}

double DnnAccuracy(const DnnModel& model, const Corpus& data) {
  if (data.records.empty()) throw DomainError("dnn: empty corpus");
  const std::vector<int> labels = LabelIndices(model, data);
  const RowMatrix probs = DnnPosteriorsBatch(model, data.Data());
  size_t correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index argmax;
    probs.row(i).maxCoeff(&argmax);
    if (static_cast<int>(argmax) == labels[static_cast<size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.rows());
}

TrialScoreMatrix ScoreDnn(const DnnModel& model, const Corpus& test) {
  model.Validate();
  if (model.languages.size() < 2)
    throw DomainError("dnn: scoring needs at least 2 languages");
  if (test.dim != model.InputDim())
    throw DimensionError("dnn: corpus dimension does not match input layer");
  const Eigen::Index n = static_cast<Eigen::Index>(test.records.size());
  const Eigen::Index num_langs = static_cast<Eigen::Index>(model.languages.size());

  TrialScoreMatrix matrix;
  matrix.kind = ScoreKind::kDnn;
  matrix.languages = model.languages;
  matrix.ids.reserve(test.records.size());
  matrix.durations.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    matrix.ids.push_back(test.records[static_cast<size_t>(i)].id);
    matrix.durations[i] = test.records[static_cast<size_t>(i)].duration_s;
  }

  // Stable log-odds straight from logits: log p_l = z_l - lse(z), and
  // log sum_{k != l} p_k via a log-sum-exp that skips column l, so posteriors
  // saturated at 1 never produce log(0).
  const RowMatrix data = test.Data();
  matrix.scores.resize(n, num_langs);
  ParallelFor((n + kReduceBlock - 1) / kReduceBlock, [&](std::ptrdiff_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kReduceBlock;
    const Eigen::Index end = std::min<Eigen::Index>(begin + kReduceBlock, n);
    RowMatrix logits =
        ForwardLogits(model, data.middleRows(begin, end - begin), nullptr);
    const double log_rest_count =
        std::log(static_cast<double>(num_langs - 1));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const auto row = logits.row(i);
      const double mx = row.maxCoeff();
      double total = 0.0;
      for (Eigen::Index l = 0; l < num_langs; ++l)
        total += std::exp(row[l] - mx);
      const double lse = mx + std::log(total);
      for (Eigen::Index l = 0; l < num_langs; ++l) {
        // log sum_{k != l} exp(z_k - mx); guard the saturated case where the
        // remainder underflows entirely.
        const double rest = total - std::exp(row[l] - mx);
        double score;
        if (rest <= 0.0) {
          score = kScoreCap;
        } else {
          const double log_p = row[l] - lse;
          const double log_rest = mx + std::log(rest) - lse - log_rest_count;
          score = log_p - log_rest;
        }
        matrix.scores(begin + i, l) =
            std::clamp(score, -kScoreCap, kScoreCap);
      }
    }
  });
  matrix.Validate();
  return matrix;
}

}  // namespace lrfuse
