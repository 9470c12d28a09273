// include/lrfuse/synth.h

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

#ifndef LRFUSE_SYNTH_H_
#define LRFUSE_SYNTH_H_

#include <cstdint>
#include <vector>

#include "lrfuse/types.h"

namespace lrfuse {

// One cluster of acoustically close languages: `num_languages` means placed
// on a sphere of radius `spread` around the cluster center. Small spreads
// make the cluster's languages confusable with each other.
struct ClusterSpec {
  int num_languages = 0;
  double spread = 0.5;
};

// Synthetic corpus recipe. Record noise follows sigma^2(d) = a + b/d, so with
// b > 0 short segments are noisier and harder to classify; durations are
// log-uniform on [duration_min_s, duration_max_s] to populate the short end
// densely. The same generator emits an unlabeled dev set, a labeled train
// set, and a labeled test set whose out-of-set records come from held-out
// language means.
struct SynthSpec {
  int n_languages = 10;  // must equal the sum over clusters
  std::vector<ClusterSpec> clusters;
  int dim = 40;
  int per_language_count = 200;  // labeled train records per language
  int dev_count = 2000;
  int test_per_language = 100;
  double oos_fraction = 0.23;  // fraction of the test corpus that is out-of-set
  int oos_languages = 3;       // held-out means the oos records come from
  double duration_min_s = 3.0;
  double duration_max_s = 120.0;
  double noise_a = 0.05;
  double noise_b = 3.0;
  uint64_t seed = 1;

  void Validate() const;
};

struct SynthCorpora {
  Corpus dev;
  Corpus train;
  Corpus test;
  // Ground-truth means, exposed for diagnostics and tests only; no pipeline
  // stage reads them.
  std::vector<std::string> language_names;
  RowMatrix language_means;  // n_languages x dim
  RowMatrix oos_means;       // oos_languages x dim
};

// Pure function of the spec: one seed, one bit-identical result.
SynthCorpora GenerateSyntheticCorpus(const SynthSpec& spec);

}  // namespace lrfuse

#endif  // LRFUSE_SYNTH_H_
