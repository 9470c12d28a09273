// src/types.cc

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

#include "lrfuse/types.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace lrfuse {

void Corpus::Finalize() {
  std::unordered_set<std::string> seen_ids;
  std::set<std::string> labels;
  dim = records.empty() ? dim : static_cast<int>(records.front().vec.size());
  for (const IVectorRecord& rec : records) {
    if (!seen_ids.insert(rec.id).second)
      throw DomainError("duplicate record id: " + rec.id);
    if (!(rec.duration_s > 0.0))
      throw DomainError("record " + rec.id + " has non-positive duration");
    if (rec.vec.size() != dim)
      throw DimensionError("record " + rec.id + " has dimension " +
                           std::to_string(rec.vec.size()) + ", expected " +
                           std::to_string(dim));
    if (!rec.vec.allFinite())
      throw NumericError("record " + rec.id + " has non-finite entries");
    if (rec.labeled()) labels.insert(rec.label);
  }
  languages.assign(labels.begin(), labels.end());
}

int Corpus::LanguageIndex(const std::string& label) const {
  auto it = std::lower_bound(languages.begin(), languages.end(), label);
  if (it == languages.end() || *it != label) return -1;
  return static_cast<int>(it - languages.begin());
}

RowMatrix Corpus::Data() const {
  RowMatrix data(records.size(), dim);
  for (size_t i = 0; i < records.size(); ++i)
    data.row(static_cast<Eigen::Index>(i)) = records[i].vec.transpose();
  return data;
}

std::string ScoreKindName(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kCosine: return "cosine";
    case ScoreKind::kGmm: return "gmm";
    case ScoreKind::kDnn: return "dnn";
    case ScoreKind::kFused: return "fused";
    case ScoreKind::kLr: return "lr";
  }
  throw DomainError("unknown score kind");
}

ScoreKind ScoreKindFromName(const std::string& name) {
  if (name == "cosine") return ScoreKind::kCosine;
  if (name == "gmm") return ScoreKind::kGmm;
  if (name == "dnn") return ScoreKind::kDnn;
  if (name == "fused") return ScoreKind::kFused;
  if (name == "lr") return ScoreKind::kLr;
  throw DomainError("unknown score kind: " + name);
}

void TrialScoreMatrix::Validate() const {
  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  if (scores.rows() != n || durations.size() != n ||
      scores.cols() != static_cast<Eigen::Index>(languages.size()))
    throw DimensionError("score matrix shape does not match ids/languages");
  if (!scores.allFinite())
    throw NumericError("score matrix contains non-finite entries");
}

}  // namespace lrfuse
