// tests/test_synth.cc

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
// Synthetic corpus generator: determinism, corpus structure, the duration
// noise law, and cluster geometry. The statistical checks use the ground
// truth means the generator exposes, so they measure the noise directly
// instead of re-estimating it.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "lrfuse/common.h"
#include "lrfuse/io.h"
#include "lrfuse/synth.h"
#include "test_util.h"

using namespace lrfuse;
using testing::Correlation;
using testing::ScratchDir;
using testing::Slurp;

namespace {

SynthSpec SmallSpec() {
  SynthSpec spec;
  spec.n_languages = 10;
  spec.clusters = {{3, 0.8}, {3, 0.8}, {4, 0.8}};
  spec.dim = 40;
  spec.per_language_count = 20;
  spec.dev_count = 100;
  spec.test_per_language = 10;
  spec.oos_fraction = 0.23;
  spec.oos_languages = 3;
  spec.noise_a = 0.1;
  spec.noise_b = 3.0;
  spec.seed = 1;
  return spec;
}

bool SameCorpus(const Corpus& a, const Corpus& b) {
  if (a.records.size() != b.records.size() || a.dim != b.dim) return false;
  for (size_t i = 0; i < a.records.size(); ++i) {
    const IVectorRecord& ra = a.records[i];
    const IVectorRecord& rb = b.records[i];
    if (ra.id != rb.id || ra.label != rb.label ||
        ra.duration_s != rb.duration_s ||
        (ra.vec - rb.vec).cwiseAbs().maxCoeff() != 0.0)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("same seed produces bit-identical corpora and files") {
  const SynthSpec spec = SmallSpec();
  const SynthCorpora first = GenerateSyntheticCorpus(spec);
  const SynthCorpora second = GenerateSyntheticCorpus(spec);
  CHECK(SameCorpus(first.dev, second.dev));
  CHECK(SameCorpus(first.train, second.train));
  CHECK(SameCorpus(first.test, second.test));
  CHECK(testing::MaxAbsDiff(first.language_means, second.language_means) ==
        0.0);
  CHECK(testing::MaxAbsDiff(first.oos_means, second.oos_means) == 0.0);

  ScratchDir dir("synth_det");
  WriteIVectorFile(first.test, dir.Path("a.ivec"));
  WriteIVectorFile(second.test, dir.Path("b.ivec"));
  CHECK(Slurp(dir.Path("a.ivec")) == Slurp(dir.Path("b.ivec")));

  // A different seed must actually change the data.
  SynthSpec other = spec;
  other.seed = 2;
  CHECK_FALSE(SameCorpus(first.train, GenerateSyntheticCorpus(other).train));
}

TEST_CASE("corpus structure follows the spec") {
  const SynthSpec spec = SmallSpec();
  const SynthCorpora corpora = GenerateSyntheticCorpus(spec);

  CHECK(corpora.dev.records.size() == 100);
  CHECK(corpora.train.records.size() == 200);
  for (const IVectorRecord& rec : corpora.dev.records)
    CHECK_FALSE(rec.labeled());
  for (const IVectorRecord& rec : corpora.train.records) CHECK(rec.labeled());
  CHECK(corpora.train.languages.size() == 10);
  CHECK(corpora.language_names.front() == "lang01");
  CHECK(corpora.language_names.back() == "lang10");

  // Out-of-set rows keep the in-set/out-of-set ratio at the requested
  // fraction, rounded to the nearest whole record.
  const size_t inset = 10 * 10;
  const size_t oos = static_cast<size_t>(
      std::llround(spec.oos_fraction / (1.0 - spec.oos_fraction) *
                   static_cast<double>(inset)));
  CHECK(corpora.test.records.size() == inset + oos);
  size_t oos_seen = 0;
  for (const IVectorRecord& rec : corpora.test.records) {
    CHECK(rec.duration_s >= spec.duration_min_s);
    CHECK(rec.duration_s <= spec.duration_max_s);
    if (rec.label == kOutOfSetLabel) {
      ++oos_seen;
    } else {
      CHECK(std::find(corpora.language_names.begin(),
                      corpora.language_names.end(),
                      rec.label) != corpora.language_names.end());
    }
  }
  CHECK(oos_seen == oos);

  // Per-language training counts are exact.
  for (const std::string& name : corpora.language_names) {
    const long count = std::count_if(
        corpora.train.records.begin(), corpora.train.records.end(),
        [&](const IVectorRecord& rec) { return rec.label == name; });
    CHECK(count == spec.per_language_count);
  }
}

TEST_CASE("invalid specs are rejected") {
  SynthSpec spec = SmallSpec();
  SUBCASE("too few records per language") {
    spec.per_language_count = 1;
    CHECK_THROWS_AS(GenerateSyntheticCorpus(spec), DomainError);
  }
  SUBCASE("cluster counts must sum to the language count") {
    spec.clusters = {{3, 0.8}, {3, 0.8}};
    CHECK_THROWS_AS(GenerateSyntheticCorpus(spec), DomainError);
  }
  SUBCASE("degenerate duration range") {
    spec.duration_min_s = 10.0;
    spec.duration_max_s = 10.0;
    CHECK_THROWS_AS(GenerateSyntheticCorpus(spec), DomainError);
  }
}

TEST_CASE("cluster geometry keeps intra-cluster means closer than inter") {
  const SynthCorpora corpora = GenerateSyntheticCorpus(SmallSpec());
  // Languages are laid out cluster by cluster: 3, 3, 4.
  const std::vector<int> cluster_of = {0, 0, 0, 1, 1, 1, 2, 2, 2, 2};
  double max_intra = 0.0;
  double min_inter = 1e300;
  for (int a = 0; a < 10; ++a) {
    for (int b = a + 1; b < 10; ++b) {
      const double dist =
          (corpora.language_means.row(a) - corpora.language_means.row(b))
              .norm();
      if (cluster_of[static_cast<size_t>(a)] ==
          cluster_of[static_cast<size_t>(b)])
        max_intra = std::max(max_intra, dist);
      else
        min_inter = std::min(min_inter, dist);
    }
  }
  CHECK(max_intra < min_inter);
}

TEST_CASE("duration-independent noise when b is zero") {
  SynthSpec spec = SmallSpec();
  spec.noise_a = 0.5;
  spec.noise_b = 0.0;
  spec.dim = 20;
  spec.per_language_count = 1000;  // 10^4 train records
  spec.dev_count = 0;
  spec.test_per_language = 1;
  spec.oos_fraction = 0.0;
  const SynthCorpora corpora = GenerateSyntheticCorpus(spec);
  REQUIRE(corpora.train.records.size() == 10000);

  std::vector<double> durations, noise_vars;
  for (const IVectorRecord& rec : corpora.train.records) {
    const int l = static_cast<int>(
        std::find(corpora.language_names.begin(), corpora.language_names.end(),
                  rec.label) -
        corpora.language_names.begin());
    const double sq =
        (rec.vec - corpora.language_means.row(l).transpose()).squaredNorm() /
        static_cast<double>(spec.dim);
    durations.push_back(rec.duration_s);
    noise_vars.push_back(sq);
  }
  CHECK(std::abs(Correlation(durations, noise_vars)) < 0.05);
}

TEST_CASE("positive b makes short segments noisier") {
  // Direct check of the law itself: with b > 0 the per-record noise variance
  // estimate correlates negatively with duration.
  SynthSpec spec = SmallSpec();
  spec.dim = 20;
  spec.per_language_count = 500;
  spec.dev_count = 0;
  spec.test_per_language = 1;
  spec.oos_fraction = 0.0;
  const SynthCorpora corpora = GenerateSyntheticCorpus(spec);
  std::vector<double> durations, noise_vars;
  for (const IVectorRecord& rec : corpora.train.records) {
    const int l = static_cast<int>(
        std::find(corpora.language_names.begin(), corpora.language_names.end(),
                  rec.label) -
        corpora.language_names.begin());
    durations.push_back(rec.duration_s);
    noise_vars.push_back(
        (rec.vec - corpora.language_means.row(l).transpose()).squaredNorm() /
        static_cast<double>(spec.dim));
  }
  CHECK(Correlation(durations, noise_vars) < -0.2);
}

TEST_CASE("classification margin grows across duration quartiles") {
  SynthSpec spec = SmallSpec();
  spec.test_per_language = 400;  // 4000 in-set test records
  spec.oos_fraction = 0.0;
  spec.dev_count = 0;
  const SynthCorpora corpora = GenerateSyntheticCorpus(spec);
  REQUIRE(corpora.test.records.size() >= 1000);

  // Margin: distance to the nearest wrong language mean minus distance to the
  // true mean. Larger is easier to classify.
  struct Sample {
    double duration;
    double margin;
  };
  std::vector<Sample> samples;
  for (const IVectorRecord& rec : corpora.test.records) {
    const int own = static_cast<int>(
        std::find(corpora.language_names.begin(), corpora.language_names.end(),
                  rec.label) -
        corpora.language_names.begin());
    const double own_dist =
        (rec.vec - corpora.language_means.row(own).transpose()).norm();
    double wrong_dist = 1e300;
    for (int l = 0; l < 10; ++l) {
      if (l == own) continue;
      wrong_dist = std::min(
          wrong_dist,
          (rec.vec - corpora.language_means.row(l).transpose()).norm());
    }
    samples.push_back({rec.duration_s, wrong_dist - own_dist});
  }
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) {
              return a.duration < b.duration;
            });
  const size_t quarter = samples.size() / 4;
  std::vector<double> quartile_mean(4, 0.0);
  for (int q = 0; q < 4; ++q) {
    const size_t begin = static_cast<size_t>(q) * quarter;
    const size_t end = q == 3 ? samples.size() : begin + quarter;
    for (size_t i = begin; i < end; ++i) quartile_mean[q] += samples[i].margin;
    quartile_mean[q] /= static_cast<double>(end - begin);
  }
  // Rank correlation between quartile index and mean margin is positive; on
  // this geometry the means come out strictly increasing.
  const std::vector<double> index = {0.0, 1.0, 2.0, 3.0};
  CHECK(Correlation(index, quartile_mean) > 0.0);
  CHECK(quartile_mean[3] > quartile_mean[0]);
}

TEST_CASE("challenge-scale spec reproduces the published counts") {
  SynthSpec spec;
  spec.n_languages = 50;
  spec.clusters = {{17, 0.8}, {17, 0.8}, {16, 0.8}};
  spec.dim = 400;
  spec.per_language_count = 300;
  spec.dev_count = 6351;
  spec.test_per_language = 100;
  spec.oos_fraction = 0.23;
  spec.oos_languages = 10;
  spec.seed = 1;
  const SynthCorpora corpora = GenerateSyntheticCorpus(spec);

  CHECK(corpora.train.records.size() == 15000);
  CHECK(corpora.dev.records.size() == 6351);
  CHECK(corpora.train.languages.size() == 50);
  const size_t expected_test =
      5000 + static_cast<size_t>(std::llround(0.23 / 0.77 * 5000.0));
  CHECK(corpora.test.records.size() == expected_test);
  // Matches the published test-set size up to rounding of the 23% share.
  CHECK(std::abs(static_cast<long>(corpora.test.records.size()) - 6500) <= 10);
}
