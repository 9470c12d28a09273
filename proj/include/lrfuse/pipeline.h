// include/lrfuse/pipeline.h

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

#ifndef LRFUSE_PIPELINE_H_
#define LRFUSE_PIPELINE_H_

#include <string>
#include <vector>

#include "lrfuse/dnn.h"
#include "lrfuse/duration_fusion.h"
#include "lrfuse/fusion_eval.h"
#include "lrfuse/language_models.h"
#include "lrfuse/synth.h"

namespace lrfuse {

// End-to-end run over the built-in synthetic corpus: generate, preprocess,
// train the cosine baseline and both subsystems, fit score-duration
// densities, fuse, tune thresholds, decide, and report cost/EER for seven
// systems (baseline; raw GMM and DNN; their fusion; the per-language
// duration-LR variants of each; and the LR fusion).

// Every knob of the run, loadable from a flat key=value config file.
// Unknown keys are an error; values are plain decimal numbers except
// synth.clusters ("count:spread,count:spread,...") and dnn.hidden
// (comma-separated layer widths).
struct PipelineConfig {
  SynthSpec synth;                 // synth.* keys
  double preprocess_eps = 1e-8;    // preprocess.eps
  int lda_dim = 49;                // preprocess.lda_dim
  GmmSubsystemConfig gmm;          // gmm.* keys
  std::vector<int> dnn_hidden{600, 600};  // dnn.hidden
  DnnTrainConfig dnn;              // dnn.* keys
  DensityFitConfig density;        // density.* keys
  FusionTrainConfig fusion;        // fusion.* keys
  int grid_points = 512;           // decision.grid_points
  CostParams cost;                 // cost.* keys

  PipelineConfig();  // fills the synthetic-corpus defaults (3 clusters)

  // Parses one "key=value" assignment; unknown key or bad value throws.
  void Set(const std::string& key, const std::string& value);
  void Validate() const;

  static PipelineConfig Load(const std::string& path);
  void Save(const std::string& path) const;
};

struct SystemResult {
  std::string name;
  double threshold = 0.0;  // tuned decision threshold
  double cost = 0.0;       // average per-class error cost, scaled
  double eer = 0.0;        // equal error rate over detection trials
};

struct PipelineResult {
  // Order: baseline, gmm, dnn, fused_ab, gmm_lr, dnn_lr, fused_cd.
  std::vector<SystemResult> systems;
  // Component counts the message-length criterion selected for each
  // score-duration density.
  int gmm_target_components = 0;
  int gmm_nontarget_components = 0;
  int dnn_target_components = 0;
  int dnn_nontarget_components = 0;

  const SystemResult& System(const std::string& name) const;
};

// Runs the full chain, writing corpora, models, score files, decisions, DET
// curves, a config snapshot, and a results.txt summary into out_dir (created
// if missing).  Deterministic: one config, one bit-identical artifact set.
PipelineResult RunPipeline(const PipelineConfig& cfg,
                           const std::string& out_dir);

}  // namespace lrfuse

#endif  // LRFUSE_PIPELINE_H_
