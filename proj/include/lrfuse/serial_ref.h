// include/lrfuse/serial_ref.h

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

#ifndef LRFUSE_SERIAL_REF_H_
#define LRFUSE_SERIAL_REF_H_

#include "lrfuse/gmm.h"

namespace lrfuse {

struct DnnModel;

// Plain-loop reference implementations of the hot numeric kernels.  These are
// deliberately naive: one point at a time, explicit scalar loops, no blocked
// reductions and no OpenMP.  Tests compare the production kernels against
// them, and the benchmark target measures the speedup.

// Reference for GmmDensity::BatchLogLikelihood.
Vector SerialGmmLogLikelihoods(const GmmModel& model, const RowMatrix& data);

// Reference for AccumulateEmStats (always accumulates second moments).
EmStats SerialEmStats(const GmmModel& model, const RowMatrix& data);

// Reference for the batched network forward pass: one row of class
// posteriors per row of data.
RowMatrix SerialDnnPosteriors(const DnnModel& model, const RowMatrix& data);

}  // namespace lrfuse

#endif  // LRFUSE_SERIAL_REF_H_
