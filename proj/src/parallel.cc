// src/parallel.cc

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

#include "lrfuse/parallel.h"

namespace lrfuse {

namespace {
int g_requested_threads = 0;
#ifdef _OPENMP
int g_default_threads = omp_get_max_threads();
#endif
}  // namespace

void SetNumThreads(int n) {
  g_requested_threads = n;
#ifdef _OPENMP
  omp_set_num_threads(n > 0 ? n : g_default_threads);
#endif
}

int NumThreads() {
#ifdef _OPENMP
  return g_requested_threads > 0 ? g_requested_threads : g_default_threads;
#else
  return 1;
#endif
}

}  // namespace lrfuse
