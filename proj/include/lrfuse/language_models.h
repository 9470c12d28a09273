// include/lrfuse/language_models.h

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

#ifndef LRFUSE_LANGUAGE_MODELS_H_
#define LRFUSE_LANGUAGE_MODELS_H_

#include <string>
#include <vector>

#include "lrfuse/gmm.h"
#include "lrfuse/types.h"

namespace lrfuse {

// The mixture-model scoring subsystem: a universal background mixture over
// unlabeled development vectors plus one MAP-adapted mixture per language.
// A segment's score for language l is the log-likelihood ratio between the
// language's model and the background model.

struct GmmSubsystemConfig {
  int num_components = 64;
  double relevance = 16.0;  // MAP relevance factor
  EmConfig em;              // background-model EM settings (diagonal)
};

struct LanguageModelSet {
  GmmModel ubm;
  std::vector<std::string> languages;   // sorted label set
  std::vector<GmmModel> per_language;   // aligned with languages
  double relevance = 16.0;
  // Free-form note recording which transforms the training vectors went
  // through, so scoring-time corpora can be checked for matching treatment.
  std::string preprocessing;

  // Throws unless every model shares the background model's component count,
  // dimension, and covariance kind, and the language list is consistent.
  void Validate() const;

  void Save(const std::string& path) const;
  static LanguageModelSet Load(const std::string& path);
};

// Fits the background mixture on dev and MAP-adapts one model per training
// language.  dev and train must be preprocessed identically and share a
// dimension; train must be fully labeled.
LanguageModelSet TrainLanguageModels(const Corpus& dev, const Corpus& train,
                                     const GmmSubsystemConfig& cfg);

// Log-likelihood-ratio scores for every (segment, language) pair.
TrialScoreMatrix ScoreGmm(const LanguageModelSet& models, const Corpus& test);

// Leave-one-out scores over the training corpus: each vector is scored
// against every language, with its own language's model recomputed as if the
// vector had not been enrolled.  Because responsibilities come from the fixed
// background model, removing the vector's (gamma, gamma*x) contribution from
// its language's adaptation statistics reproduces the retrained model
// exactly - no refit needed.
struct LooResult {
  TrialScoreMatrix matrix;             // one row per training vector
  std::vector<ScoreDurationPair> pairs;  // flattened (score, log dur) trials
};

LooResult LooScores(const LanguageModelSet& models, const Corpus& train);

// Converts a labeled score matrix into (score, log-duration, language,
// target?) trial pairs, row-major: rows in matrix order, languages in column
// order.  row_labels[i] is the true language of row i.
std::vector<ScoreDurationPair> MatrixToPairs(
    const TrialScoreMatrix& matrix, const std::vector<std::string>& row_labels);

}  // namespace lrfuse

#endif  // LRFUSE_LANGUAGE_MODELS_H_
