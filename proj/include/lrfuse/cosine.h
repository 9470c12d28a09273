// include/lrfuse/cosine.h

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
//
// Reference recipe: average each language's unit i-vectors, re-project the
// average onto the unit sphere, and score by inner product. Runs on the
// whitened and length-normalized vectors, without LDA.

#ifndef LRFUSE_COSINE_H_
#define LRFUSE_COSINE_H_

#include <string>
#include <vector>

#include "lrfuse/types.h"

namespace lrfuse {

struct CosineModel {
  std::vector<std::string> languages;
  RowMatrix language_means;  // L x D, every row unit norm

  void Save(const std::string& path) const;
  static CosineModel Load(const std::string& path);
};

// Train corpus must be labeled and already whitened + length-normalized.
// A language whose records average to the zero vector cannot be enrolled.
CosineModel TrainCosine(const Corpus& train);

// v must be unit norm within 1e-9; scores are inner products in [-1, 1].
Vector ScoreCosine(const CosineModel& model, const Vector& v);

TrialScoreMatrix ScoreCosineCorpus(const CosineModel& model,
                                   const Corpus& test);

}  // namespace lrfuse

#endif  // LRFUSE_COSINE_H_
