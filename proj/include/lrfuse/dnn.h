// include/lrfuse/dnn.h

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

#ifndef LRFUSE_DNN_H_
#define LRFUSE_DNN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "lrfuse/types.h"

namespace lrfuse {

// Feedforward posterior network: sigmoid hidden layers, softmax output, one
// output node per language.  The production configuration is 49-600-600-50;
// every size is configurable.

struct DnnModel {
  std::vector<int> layer_dims;     // e.g. {49, 600, 600, 50}
  std::vector<RowMatrix> weights;  // layer i: layer_dims[i+1] x layer_dims[i]
  std::vector<Vector> biases;      // layer i: layer_dims[i+1]
  std::vector<std::string> languages;  // output index -> name; set by caller

  int NumAffineLayers() const { return static_cast<int>(weights.size()); }
  int InputDim() const { return layer_dims.front(); }
  int OutputDim() const { return layer_dims.back(); }

  // Throws unless the dimension chain is consistent, all parameters are
  // finite, and languages (when set) match the output size.
  void Validate() const;

  void Save(const std::string& path) const;
  static DnnModel Load(const std::string& path);
};

struct DnnTrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 128;
  int epochs = 100;
  double l2 = 1e-4;  // weight decay on weight matrices (not biases)
  uint64_t seed = 1;
  int patience = 10;                 // epochs without validation improvement
  double validation_fraction = 0.1;  // share of records held out, in (0, 0.5]

  void Validate() const;
};

struct DnnTrainReport {
  std::vector<double> train_loss;  // mean cross-entropy per epoch
  std::vector<double> val_loss;
  int best_epoch = -1;  // epoch whose parameters were returned
  bool early_stopped = false;
};

// Deterministic scaled-uniform initialization: layer weights drawn from
// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)), biases zero.
DnnModel InitDnn(const std::vector<int>& layer_dims, uint64_t seed);

// Minibatch stochastic gradient descent with momentum on the mean
// cross-entropy, holding out a validation split for early stopping; returns
// the parameters of the best validation epoch.  Labels must be contained in
// model.languages.  A non-finite loss raises NumericError naming the epoch
// and learning rate.
DnnModel TrainDnn(const DnnModel& model, const Corpus& train,
                  const DnnTrainConfig& cfg, DnnTrainReport* report = nullptr);

// Softmax class posteriors for one input vector.
Vector DnnPosteriors(const DnnModel& model, const Vector& v);

// Posteriors for every row of data, computed in fixed-size row blocks so the
// result is bit-identical for any thread count.
RowMatrix DnnPosteriorsBatch(const DnnModel& model, const RowMatrix& data);

// Mean cross-entropy of a labeled batch plus its full parameter gradient
// (including the L2 term).  Exposed so the gradients can be checked against
// finite differences.
double DnnLossAndGradients(const DnnModel& model, const RowMatrix& x,
                           const std::vector<int>& labels, double l2,
                           std::vector<RowMatrix>* grad_w,
                           std::vector<Vector>* grad_b);

// Fraction of records whose argmax posterior matches their label.
double DnnAccuracy(const DnnModel& model, const Corpus& data);

// Per-language posterior log-odds: score(x, l) = log p(l|x) minus the log of
// the mean posterior of the other languages, clamped to [-30, 30].
TrialScoreMatrix ScoreDnn(const DnnModel& model, const Corpus& test);

}  // namespace lrfuse

#endif  // LRFUSE_DNN_H_
