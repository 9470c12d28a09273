// include/lrfuse/parallel.h

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

#ifndef LRFUSE_PARALLEL_H_
#define LRFUSE_PARALLEL_H_

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lrfuse {

// Rows per reduction block. Fixed so that the summation tree depends only on
// the problem size, never on the thread count or schedule: every OpenMP
// result is bit-identical to the single-thread run.
inline constexpr std::ptrdiff_t kReduceBlock = 512;

void SetNumThreads(int n);  // 0 restores the OpenMP default
int NumThreads();

// Independent iterations; each index writes only its own outputs.
template <typename Fn>
void ParallelFor(std::ptrdiff_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

// Deterministic reduction over [0, n): each fixed-size block accumulates a
// private partial (in index order), then partials are folded serially in
// block order.
//
//   make_partial()                      -> Partial (zero-initialized)
//   accumulate(partial, begin, end)     processes rows [begin, end)
//   fold(accumulator, partial)          merges one block into the total
template <typename Partial, typename MakeFn, typename AccumulateFn,
          typename FoldFn>
Partial BlockedReduce(std::ptrdiff_t n, MakeFn&& make_partial,
                      AccumulateFn&& accumulate, FoldFn&& fold) {
  const std::ptrdiff_t num_blocks =
      n > 0 ? (n + kReduceBlock - 1) / kReduceBlock : 0;
  std::vector<Partial> partials;
  partials.reserve(static_cast<size_t>(num_blocks));
  for (std::ptrdiff_t b = 0; b < num_blocks; ++b)
    partials.push_back(make_partial());

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t b = 0; b < num_blocks; ++b) {
    const std::ptrdiff_t begin = b * kReduceBlock;
    const std::ptrdiff_t end = begin + kReduceBlock < n ? begin + kReduceBlock : n;
    accumulate(partials[static_cast<size_t>(b)], begin, end);
  }

  Partial total = make_partial();
  for (std::ptrdiff_t b = 0; b < num_blocks; ++b)
    fold(total, partials[static_cast<size_t>(b)]);
  return total;
}

}  // namespace lrfuse

#endif  // LRFUSE_PARALLEL_H_
