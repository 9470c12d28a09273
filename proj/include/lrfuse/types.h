// include/lrfuse/types.h

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

#ifndef LRFUSE_TYPES_H_
#define LRFUSE_TYPES_H_

#include <string>
#include <vector>

#include "lrfuse/common.h"

namespace lrfuse {

// One segment: id, duration in seconds, optional language label (empty means
// unlabeled), and the segment vector.
struct IVectorRecord {
  std::string id;
  double duration_s = 0.0;
  std::string label;  // empty = unlabeled
  Vector vec;

  bool labeled() const { return !label.empty(); }
};

// Ordered collection of records sharing one dimension. `languages` is the
// sorted set of distinct labels present; call Finalize() after editing
// records directly.
struct Corpus {
  std::vector<IVectorRecord> records;
  int dim = 0;
  std::vector<std::string> languages;

  size_t size() const { return records.size(); }

  // Recomputes dim and the language list; validates per-record invariants
  // (unique ids, positive durations, finite entries, consistent dimension).
  void Finalize();

  // Index of a language in `languages`, or -1.
  int LanguageIndex(const std::string& label) const;

  // Stacks all record vectors into a row-per-record matrix.
  RowMatrix Data() const;
};

// Per-segment, per-language score table flowing between subsystems, fusion,
// decision and evaluation.
enum class ScoreKind { kCosine, kGmm, kDnn, kFused, kLr };

std::string ScoreKindName(ScoreKind kind);
ScoreKind ScoreKindFromName(const std::string& name);

struct TrialScoreMatrix {
  std::vector<std::string> ids;
  Vector durations;  // seconds, aligned with ids
  std::vector<std::string> languages;
  RowMatrix scores;  // ids.size() x languages.size()
  ScoreKind kind = ScoreKind::kGmm;

  void Validate() const;  // finite scores, consistent shapes
};

// One leave-one-out (or train) trial outcome used to fit the joint
// score/duration densities. `language` names the scored model.
struct ScoreDurationPair {
  double score = 0.0;
  double log_duration = 0.0;
  std::string language;
  bool target = false;
};

struct Decision {
  std::string id;
  std::string label;  // language name or the out-of-set label
};

}  // namespace lrfuse

#endif  // LRFUSE_TYPES_H_
