// include/lrfuse/fusion_eval.h

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

#ifndef LRFUSE_FUSION_EVAL_H_
#define LRFUSE_FUSION_EVAL_H_

#include <string>
#include <vector>

#include "lrfuse/types.h"

namespace lrfuse {

// Linear fusion of subsystem score matrices with a log-duration quality term,
// threshold-based open-set decisions, the detection cost used for reporting,
// and detection-error-tradeoff curves.

// fused(x, l) = sum_j weights[j] * s_j(x, l)
//             + quality_weight * log d(x) + offset.
struct FusionModel {
  Vector subsystem_weights;
  double quality_weight = 0.0;
  double offset = 0.0;

  void Validate() const;  // finite, >= 1 subsystem
  void Save(const std::string& path) const;
  static FusionModel Load(const std::string& path);
};

struct FusionTrainConfig {
  double tol = 1e-8;    // stop when the gradient's max-norm drops below this
  int max_iter = 1000;
};

struct FusionTrainReport {
  int iterations = 0;
  double final_loss = 0.0;  // mean cross-entropy over trials
  bool converged = false;
};

// Fits the fusion parameters by logistic regression on (segment, language)
// trials: features are the subsystem scores plus the segment's log duration,
// the binary label is whether the row's true language matches the column.
// row_labels[i] is the truth for row i (out-of-set rows allowed; all their
// trials are non-targets).  Matrices must share ids, durations and languages.
// All-target or all-non-target trial sets raise DomainError.
FusionModel TrainFusion(const std::vector<TrialScoreMatrix>& systems,
                        const std::vector<std::string>& row_labels,
                        const FusionTrainConfig& cfg = FusionTrainConfig(),
                        FusionTrainReport* report = nullptr);

// Applies the linear model; kind becomes kFused.
TrialScoreMatrix ApplyFusion(const FusionModel& model,
                             const std::vector<TrialScoreMatrix>& systems);

struct DecisionPolicy {
  double threshold = 0.0;
  std::string out_label = kOutOfSetLabel;
};

// Per segment: the argmax language if the row maximum strictly exceeds the
// threshold (ties broken by the first language in column order), otherwise
// the out-of-set label.  Boundary scores (max == threshold) are out-of-set:
// claiming a language requires strictly clearing the bar.
std::vector<Decision> Decide(const TrialScoreMatrix& matrix,
                             const DecisionPolicy& policy);

struct CostParams {
  double p_oos = 0.23;   // prior probability of an out-of-set segment
  double scale = 100.0;  // reporting factor applied to the [0, 1] cost
};

// Average per-class error cost:
//   cost = scale * [ (1 - p_oos)/n * sum_k P_error(k) + p_oos * P_error(oos) ]
// where n = languages.size(), P_error(k) is the fraction of class-k trials
// decided wrongly, and the out-of-set class is labeled kOutOfSetLabel in
// `truth`.  Classes with no trials contribute 0 with a stderr warning.
// A decided id missing from truth, or a truth label outside
// languages + out-of-set, raises DomainError.
double ComputeCost(const std::vector<Decision>& decisions,
                   const std::vector<Decision>& truth,
                   const std::vector<std::string>& languages,
                   const CostParams& params);

// Picks the threshold minimizing ComputeCost over a deterministic candidate
// grid: `grid_points` quantiles of the per-row maximum scores, plus one point
// below the minimum (the never-reject end).  Ties go to the smallest
// threshold.  row_labels may include the out-of-set label.
DecisionPolicy TuneThreshold(const TrialScoreMatrix& matrix,
                             const std::vector<std::string>& row_labels,
                             const CostParams& params, int grid_points = 512);

// Appends one synthetic out-of-set row per input row: the row's own-language
// score is pushed below the row minimum, so the remaining columns mimic a
// segment from a language with no model.  Threshold tuning needs such rows
// when the tuning scores come from a corpus with no true out-of-set
// segments.  labels[i] must name a score column; aug_labels receives the
// original labels followed by one out-of-set label per proxy row.
TrialScoreMatrix WithOosProxies(const TrialScoreMatrix& matrix,
                                const std::vector<std::string>& labels,
                                std::vector<std::string>* aug_labels);

struct DetPoint {
  double threshold = 0.0;
  double fa_rate = 0.0;    // non-targets scoring at or above the threshold
  double miss_rate = 0.0;  // targets scoring strictly below the threshold
};

struct DetCurve {
  std::vector<DetPoint> points;  // ascending thresholds, ending at +infinity
  double eer = 0.0;              // linear interpolation where miss == fa
};

// Detection-error tradeoff over detection trials (score, is-target).  Sweeps
// every distinct score as a threshold plus +infinity; needs at least one
// target and one non-target.
DetCurve ComputeDetFromTrials(const Vector& scores,
                              const std::vector<bool>& is_target);

// Flattens the matrix into (segment, language) trials — target where the
// row's true label equals the column language — and computes the curve.
DetCurve ComputeDet(const TrialScoreMatrix& matrix,
                    const std::vector<std::string>& row_labels);

// Tab-separated DET file: a '#det' header carrying the EER, a column-name
// line, then one "<threshold>\t<fa_rate>\t<miss_rate>" row per point.
void WriteDetFile(const DetCurve& curve, const std::string& path);

}  // namespace lrfuse

#endif  // LRFUSE_FUSION_EVAL_H_
