// bench/bench_kernels.cc

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
// Production kernels against their plain-loop serial references, at the
// shapes the pipeline actually runs: a 64-component diagonal mixture over
// 49-dimensional vectors and the 49-600-600-50 posterior network.

#include <benchmark/benchmark.h>

#include "lrfuse/dnn.h"
#include "lrfuse/gmm.h"
#include "lrfuse/rng.h"
#include "lrfuse/serial_ref.h"

namespace {

using namespace lrfuse;

GmmModel MakeModel(int c, int d, uint64_t seed) {
  Rng rng(seed);
  GmmModel model;
  model.covariance_kind = CovarianceKind::kDiagonal;
  model.weights = Vector::Constant(c, 1.0 / c);
  model.means = RowMatrix(c, d);
  model.diag_vars = RowMatrix(c, d);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < d; ++j) {
      model.means(i, j) = rng.Normal();
      model.diag_vars(i, j) = 0.5 + rng.Uniform();
    }
  return model;
}

RowMatrix MakeData(int n, int d, uint64_t seed) {
  Rng rng(seed);
  RowMatrix data(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) data(i, j) = rng.Normal();
  return data;
}

DnnModel MakeNetwork(uint64_t seed) {
  DnnModel model = InitDnn({49, 600, 600, 50}, seed);
  for (int i = 0; i < model.OutputDim(); ++i)
    model.languages.push_back("lang" + std::to_string(i));
  return model;
}

void BM_GmmBatchLogLik(benchmark::State& state) {
  const GmmModel model = MakeModel(64, 49, 7);
  const GmmDensity density(model);
  const RowMatrix data = MakeData(static_cast<int>(state.range(0)), 49, 11);
  for (auto _ : state) {
    Vector ll = density.BatchLogLikelihood(data);
    benchmark::DoNotOptimize(ll.data());
  }
  state.SetItemsProcessed(state.iterations() * data.rows());
}

void BM_GmmBatchLogLikSerial(benchmark::State& state) {
  const GmmModel model = MakeModel(64, 49, 7);
  const RowMatrix data = MakeData(static_cast<int>(state.range(0)), 49, 11);
  for (auto _ : state) {
    Vector ll = SerialGmmLogLikelihoods(model, data);
    benchmark::DoNotOptimize(ll.data());
  }
  state.SetItemsProcessed(state.iterations() * data.rows());
}

void BM_EmStats(benchmark::State& state) {
  const GmmModel model = MakeModel(64, 49, 7);
  const GmmDensity density(model);
  const RowMatrix data = MakeData(static_cast<int>(state.range(0)), 49, 11);
  for (auto _ : state) {
    EmStats stats = AccumulateEmStats(density, data, true);
    benchmark::DoNotOptimize(stats.n.data());
  }
  state.SetItemsProcessed(state.iterations() * data.rows());
}

void BM_EmStatsSerial(benchmark::State& state) {
  const GmmModel model = MakeModel(64, 49, 7);
  const RowMatrix data = MakeData(static_cast<int>(state.range(0)), 49, 11);
  for (auto _ : state) {
    EmStats stats = SerialEmStats(model, data);
    benchmark::DoNotOptimize(stats.n.data());
  }
  state.SetItemsProcessed(state.iterations() * data.rows());
}

void BM_DnnPosteriors(benchmark::State& state) {
  const DnnModel model = MakeNetwork(7);
  const RowMatrix data = MakeData(static_cast<int>(state.range(0)), 49, 11);
  for (auto _ : state) {
    RowMatrix post = DnnPosteriorsBatch(model, data);
    benchmark::DoNotOptimize(post.data());
  }
  state.SetItemsProcessed(state.iterations() * data.rows());
}

void BM_DnnPosteriorsSerial(benchmark::State& state) {
  const DnnModel model = MakeNetwork(7);
  const RowMatrix data = MakeData(static_cast<int>(state.range(0)), 49, 11);
  for (auto _ : state) {
    RowMatrix post = SerialDnnPosteriors(model, data);
    benchmark::DoNotOptimize(post.data());
  }
  state.SetItemsProcessed(state.iterations() * data.rows());
}

BENCHMARK(BM_GmmBatchLogLik)->Arg(512)->Arg(4096);
BENCHMARK(BM_GmmBatchLogLikSerial)->Arg(512)->Arg(4096);
BENCHMARK(BM_EmStats)->Arg(512)->Arg(4096);
BENCHMARK(BM_EmStatsSerial)->Arg(512)->Arg(4096);
BENCHMARK(BM_DnnPosteriors)->Arg(256)->Arg(1024);
BENCHMARK(BM_DnnPosteriorsSerial)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
