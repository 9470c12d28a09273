// include/lrfuse/duration_fusion.h

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

#ifndef LRFUSE_DURATION_FUSION_H_
#define LRFUSE_DURATION_FUSION_H_

#include <string>
#include <vector>

#include "lrfuse/gmm.h"
#include "lrfuse/types.h"

namespace lrfuse {

// Joint (score, log-duration) density models.  Raw subsystem scores drift
// with segment duration; modeling the 2-D density of target and non-target
// trials and emitting the log-likelihood ratio between the two absorbs that
// drift.  A universal target/non-target pair is fit on pooled trials, and
// per-language pairs are MAP-adapted from it where enough data exists.

struct DensityFitConfig {
  int c_max = 16;               // MML component-count ceiling
  EmConfig em;                  // inner EM settings; kind forced to full
  double relevance = 16.0;      // MAP relevance for per-language adaptation
  int min_universal = 50;       // minimum pairs per class for the universal fit
  int min_language = 10;        // per-language minimum; below -> fallback
};

struct ScoreDurationDensityModel {
  ScoreKind source = ScoreKind::kGmm;  // subsystem the raw scores came from
  GmmModel universal_target;           // 2-D, full covariance
  GmmModel universal_nontarget;
  std::vector<std::string> languages;  // sorted; empty until adaptation
  std::vector<GmmModel> per_language_target;     // aligned with languages
  std::vector<GmmModel> per_language_nontarget;  // aligned with languages
  // Languages whose pair counts fell below the minimum and therefore carry
  // copies of the universal models.
  std::vector<std::string> fallback_languages;
  double relevance = 16.0;

  void Validate() const;
  void Save(const std::string& path) const;
  static ScoreDurationDensityModel Load(const std::string& path);
};

// Stacks the (score, log_duration) columns of the selected pairs.
RowMatrix PairsToMatrix(const std::vector<ScoreDurationPair>& pairs,
                        bool targets);

// Fits the universal target and non-target densities on the pooled pairs by
// minimum-message-length component selection (full covariance).  Requires at
// least cfg.min_universal pairs of each class.  Optional reports receive the
// per-class selection traces.
ScoreDurationDensityModel FitUniversalDensities(
    const std::vector<ScoreDurationPair>& pairs, ScoreKind source,
    const DensityFitConfig& cfg, MmlReport* target_report = nullptr,
    MmlReport* nontarget_report = nullptr);

// MAP-adapts one target/non-target pair per language named in `pairs`.
// A language with fewer than cfg.min_language pairs on either side keeps
// copies of the universal models instead; such languages are appended to
// model->fallback_languages and a warning line goes to stderr.
void AdaptLanguageDensities(const std::vector<ScoreDurationPair>& pairs,
                            const DensityFitConfig& cfg,
                            ScoreDurationDensityModel* model);

// Log-likelihood ratio log f(s, d | target) - log f(s, d | non-target) under
// the universal pair.  Both log-densities are clamped at -745 before the
// subtraction so one-sided underflow cannot produce infinities.
double LrUniversal(const ScoreDurationDensityModel& model, double score,
                   double log_dur);

// Same ratio under the named language's adapted pair.
double LrPerLanguage(const ScoreDurationDensityModel& model,
                     const std::string& language, double score,
                     double log_dur);

// Replaces every raw score with its log-likelihood ratio, using each
// segment's log duration; kind becomes kLr.  With per_language set, each
// column uses that language's adapted pair (requiring the matrix's language
// set to equal the model's); otherwise all columns share the universal pair.
TrialScoreMatrix TransformScores(const ScoreDurationDensityModel& model,
                                 const TrialScoreMatrix& raw,
                                 bool per_language);

}  // namespace lrfuse

#endif  // LRFUSE_DURATION_FUSION_H_
