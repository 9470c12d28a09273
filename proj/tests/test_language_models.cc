// tests/test_language_models.cc

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
// Background-model training, per-language adaptation, likelihood-ratio
// scoring, and the leave-one-out shortcut. The shortcut is checked against a
// brute-force implementation that actually re-adapts without each vector.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lrfuse/common.h"
#include "lrfuse/gmm.h"
#include "lrfuse/language_models.h"
#include "lrfuse/rng.h"
#include "test_util.h"

using namespace lrfuse;
using testing::GaussianRows;
using testing::MakeCorpus;
using testing::ScratchDir;

namespace {

// Labeled corpus with per-language offsets so languages are separable.
Corpus LabeledClusters(int languages, int per_language, Eigen::Index d,
                       uint64_t seed, double spread = 4.0) {
  Rng rng(seed);
  RowMatrix data(static_cast<Eigen::Index>(languages) * per_language, d);
  std::vector<std::string> labels;
  std::vector<double> durations;
  for (int l = 0; l < languages; ++l) {
    Vector center(d);
    for (Eigen::Index j = 0; j < d; ++j) center[j] = spread * rng.Normal();
    for (int k = 0; k < per_language; ++k) {
      const Eigen::Index i = static_cast<Eigen::Index>(l) * per_language + k;
      for (Eigen::Index j = 0; j < d; ++j)
        data(i, j) = center[j] + rng.Normal();
      labels.push_back("lang" + std::to_string(l));
      durations.push_back(rng.Uniform(3.0, 30.0));
    }
  }
  return MakeCorpus(data, labels, durations);
}

Corpus Unlabeled(const Corpus& in) {
  Corpus out = in;
  for (IVectorRecord& rec : out.records) rec.label.clear();
  out.Finalize();
  return out;
}

}  // namespace

TEST_CASE("training composes the background fit with per-language adaptation") {
  const Corpus train = LabeledClusters(3, 40, 4, 2);
  const Corpus dev = Unlabeled(LabeledClusters(3, 50, 4, 9));

  GmmSubsystemConfig cfg;
  cfg.num_components = 2;
  cfg.relevance = 10.0;
  cfg.em.seed = 5;

  const LanguageModelSet models = TrainLanguageModels(dev, train, cfg);
  REQUIRE(models.languages == std::vector<std::string>{"lang0", "lang1",
                                                       "lang2"});
  REQUIRE(models.per_language.size() == 3);
  CHECK(models.relevance == cfg.relevance);
  models.Validate();

  // The background model is the plain EM fit on the dev matrix.
  const GmmModel ubm = FitGmmEm(dev.Data(), cfg.num_components, cfg.em);
  CHECK(testing::MaxAbsDiff(models.ubm.means, ubm.means) <= 1e-12);
  CHECK((models.ubm.weights - ubm.weights).cwiseAbs().maxCoeff() <= 1e-12);

  // Each language model is the MAP adaptation on that language's rows.
  for (size_t l = 0; l < models.languages.size(); ++l) {
    std::vector<Eigen::Index> rows;
    for (size_t i = 0; i < train.records.size(); ++i)
      if (train.records[i].label == models.languages[l])
        rows.push_back(static_cast<Eigen::Index>(i));
    RowMatrix lang_data(rows.size(), train.dim);
    for (size_t k = 0; k < rows.size(); ++k)
      lang_data.row(static_cast<Eigen::Index>(k)) =
          train.records[static_cast<size_t>(rows[k])].vec.transpose();
    const GmmModel expected = MapAdapt(ubm, lang_data, cfg.relevance);
    CHECK(testing::MaxAbsDiff(models.per_language[l].means, expected.means) <=
          1e-12);
  }
}

TEST_CASE("scores are adapted-versus-background log-likelihood ratios") {
  // Hand-built set: background at 0, one language shifted right, one left.
  GmmModel ubm;
  ubm.weights = Vector::Ones(1);
  ubm.means = RowMatrix::Zero(1, 1);
  ubm.diag_vars = RowMatrix::Ones(1, 1);

  GmmModel hi = ubm;
  hi.means(0, 0) = 2.0;
  GmmModel lo = ubm;
  lo.means(0, 0) = -2.0;

  LanguageModelSet models;
  models.ubm = ubm;
  models.languages = {"hi", "lo"};
  models.per_language = {hi, lo};
  models.relevance = 16.0;

  RowMatrix test_data(3, 1);
  test_data << 2.0, -2.0, 0.0;
  const Corpus test = MakeCorpus(test_data);

  const TrialScoreMatrix scores = ScoreGmm(models, test);
  CHECK(scores.kind == ScoreKind::kGmm);
  REQUIRE(scores.languages == models.languages);
  REQUIRE(scores.scores.rows() == 3);

  // Oracle: difference of the two mixture log-densities.
  for (Eigen::Index i = 0; i < 3; ++i) {
    const Vector x = test.records[static_cast<size_t>(i)].vec;
    const double base = GmmLogLikelihood(ubm, x);
    CHECK(scores.scores(i, 0) ==
          doctest::Approx(GmmLogLikelihood(hi, x) - base).epsilon(1e-12));
    CHECK(scores.scores(i, 1) ==
          doctest::Approx(GmmLogLikelihood(lo, x) - base).epsilon(1e-12));
  }

  // Sign structure: a point on a language's mean favors that language.
  CHECK(scores.scores(0, 0) > 0.0);
  CHECK(scores.scores(0, 1) < 0.0);
  CHECK(scores.scores(1, 1) > 0.0);
  CHECK(scores.scores(1, 0) < 0.0);

  // Ids and durations ride along with the rows.
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(scores.ids[static_cast<size_t>(i)] ==
          test.records[static_cast<size_t>(i)].id);
    CHECK(scores.durations[i] ==
          test.records[static_cast<size_t>(i)].duration_s);
  }
}

TEST_CASE("a huge relevance factor makes every score vanish") {
  const Corpus train = LabeledClusters(3, 20, 3, 7);
  const Corpus dev = Unlabeled(LabeledClusters(3, 40, 3, 8));
  GmmSubsystemConfig cfg;
  cfg.num_components = 2;
  cfg.relevance = 1e12;
  const LanguageModelSet models = TrainLanguageModels(dev, train, cfg);
  const TrialScoreMatrix scores = ScoreGmm(models, train);
  CHECK(scores.scores.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("score rows follow record order") {
  const Corpus train = LabeledClusters(3, 25, 3, 12);
  const Corpus dev = Unlabeled(LabeledClusters(3, 40, 3, 13));
  GmmSubsystemConfig cfg;
  cfg.num_components = 2;
  const LanguageModelSet models = TrainLanguageModels(dev, train, cfg);

  Corpus shuffled = train;
  std::reverse(shuffled.records.begin(), shuffled.records.end());
  const TrialScoreMatrix forward = ScoreGmm(models, train);
  const TrialScoreMatrix backward = ScoreGmm(models, shuffled);
  const Eigen::Index n = forward.scores.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    CHECK(backward.ids[static_cast<size_t>(i)] ==
          forward.ids[static_cast<size_t>(n - 1 - i)]);
    CHECK((backward.scores.row(i) - forward.scores.row(n - 1 - i))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("leave-one-out equals brute-force re-adaptation") {
  const Corpus train = LabeledClusters(4, 25, 3, 19);
  const Corpus dev = Unlabeled(LabeledClusters(4, 60, 3, 20));
  GmmSubsystemConfig cfg;
  cfg.num_components = 2;
  cfg.relevance = 8.0;
  const LanguageModelSet models = TrainLanguageModels(dev, train, cfg);

  const LooResult loo = LooScores(models, train);
  REQUIRE(loo.matrix.scores.rows() == 100);
  REQUIRE(loo.matrix.languages == models.languages);

  const GmmDensity ubm_density(models.ubm);
  for (size_t i = 0; i < train.records.size(); ++i) {
    const IVectorRecord& rec = train.records[i];
    const Vector& x = rec.vec;
    const double base = ubm_density.LogLikelihood(x);
    for (size_t l = 0; l < models.languages.size(); ++l) {
      const std::string& lang = models.languages[l];
      // Re-adapt language l from scratch, excluding record i when it belongs
      // to that language.
      MapStats stats =
          MapStats::Zero(models.ubm.NumComponents(), models.ubm.Dim());
      for (size_t k = 0; k < train.records.size(); ++k) {
        if (train.records[k].label != lang) continue;
        if (k == i) continue;
        stats.Add(ubm_density.Responsibilities(train.records[k].vec),
                  train.records[k].vec);
      }
      const GmmModel adapted =
          MapAdaptFromStats(models.ubm, stats, models.relevance);
      const double expected = GmmLogLikelihood(adapted, x) - base;
      CHECK(loo.matrix.scores(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(l)) ==
            doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("leave-one-out trial pairs carry durations, labels and counts") {
  const Corpus train = LabeledClusters(5, 12, 3, 23);
  const Corpus dev = Unlabeled(LabeledClusters(5, 30, 3, 24));
  GmmSubsystemConfig cfg;
  cfg.num_components = 2;
  const LanguageModelSet models = TrainLanguageModels(dev, train, cfg);
  const LooResult loo = LooScores(models, train);

  const size_t n = train.records.size();
  const size_t langs = models.languages.size();
  REQUIRE(loo.pairs.size() == n * langs);

  size_t targets = 0;
  for (size_t i = 0; i < n; ++i) {
    const IVectorRecord& rec = train.records[i];
    for (size_t l = 0; l < langs; ++l) {
      const ScoreDurationPair& pair = loo.pairs[i * langs + l];
      CHECK(pair.language == models.languages[l]);
      CHECK(pair.target == (rec.label == models.languages[l]));
      CHECK(pair.log_duration ==
            doctest::Approx(std::log(rec.duration_s)).epsilon(1e-12));
      CHECK(pair.score == loo.matrix.scores(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(l)));
      CHECK(std::isfinite(pair.score));
      if (pair.target) ++targets;
    }
  }
  CHECK(targets == n);  // exactly one target trial per record
}

TEST_CASE("leave-one-out at evaluation-plan scale produces the full trial set") {
  // Fifty languages, 300 records each: one target trial per record and 49
  // non-target trials, 750000 pairs in total.
  const Corpus train = LabeledClusters(50, 300, 5, 31, 6.0);
  const Corpus dev = Unlabeled(LabeledClusters(50, 40, 5, 32, 6.0));
  GmmSubsystemConfig cfg;
  cfg.num_components = 2;
  const LanguageModelSet models = TrainLanguageModels(dev, train, cfg);
  const LooResult loo = LooScores(models, train);

  REQUIRE(loo.pairs.size() == 750000);
  size_t targets = 0;
  for (const ScoreDurationPair& pair : loo.pairs) {
    if (pair.target) ++targets;
  }
  CHECK(targets == 15000);
  CHECK(loo.pairs.size() - targets == 735000);
  CHECK(loo.matrix.scores.allFinite());
}

TEST_CASE("score matrices flatten into row-major trial pairs") {
  TrialScoreMatrix matrix;
  matrix.ids = {"u1", "u2"};
  matrix.durations = Vector(2);
  matrix.durations << std::exp(1.0), std::exp(2.0);
  matrix.languages = {"a", "b"};
  matrix.scores = RowMatrix(2, 2);
  matrix.scores << 0.1, -0.2, 0.3, 0.4;

  const std::vector<ScoreDurationPair> pairs =
      MatrixToPairs(matrix, {"a", "b"});
  REQUIRE(pairs.size() == 4);
  CHECK(pairs[0].score == 0.1);
  CHECK(pairs[0].language == "a");
  CHECK(pairs[0].target);
  CHECK(pairs[0].log_duration == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pairs[1].score == -0.2);
  CHECK(!pairs[1].target);
  CHECK(pairs[2].score == 0.3);
  CHECK(!pairs[2].target);
  CHECK(pairs[3].score == 0.4);
  CHECK(pairs[3].target);
  CHECK(pairs[3].log_duration == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("degenerate training inputs are rejected") {
  const Corpus dev = Unlabeled(LabeledClusters(3, 30, 3, 40));
  GmmSubsystemConfig cfg;
  cfg.num_components = 2;

  SUBCASE("a language with fewer than two records cannot be left-one-out") {
    Corpus train = LabeledClusters(3, 10, 3, 41);
    // Strip language lang0 down to its first record only.
    train.records.erase(
        std::remove_if(train.records.begin() + 1, train.records.end(),
                       [](const IVectorRecord& r) { return r.label == "lang0"; }),
        train.records.end());
    train.Finalize();
    const LanguageModelSet models = TrainLanguageModels(dev, train, cfg);
    CHECK_THROWS_AS(LooScores(models, train), DomainError);
  }
  SUBCASE("unlabeled training records are rejected") {
    Corpus train = LabeledClusters(3, 10, 3, 42);
    train.records[4].label.clear();
    train.Finalize();
    CHECK_THROWS_AS(TrainLanguageModels(dev, train, cfg), DomainError);
  }
  SUBCASE("dimension mismatches between dev and train are rejected") {
    const Corpus train = LabeledClusters(3, 10, 4, 43);
    CHECK_THROWS_AS(TrainLanguageModels(dev, train, cfg), DimensionError);
  }
}

TEST_CASE("language model sets reload bit-exactly") {
  ScratchDir dir("lm_set");
  const Corpus train = LabeledClusters(3, 15, 3, 51);
  const Corpus dev = Unlabeled(LabeledClusters(3, 30, 3, 52));
  GmmSubsystemConfig cfg;
  cfg.num_components = 2;
  LanguageModelSet models = TrainLanguageModels(dev, train, cfg);
  models.preprocessing = "center-whiten length-norm lda";
  models.Save(dir.Path("set.model"));

  const LanguageModelSet loaded = LanguageModelSet::Load(dir.Path("set.model"));
  CHECK(loaded.languages == models.languages);
  CHECK(loaded.relevance == models.relevance);
  CHECK(loaded.preprocessing == models.preprocessing);
  CHECK(testing::MaxAbsDiff(loaded.ubm.means, models.ubm.means) == 0.0);
  CHECK(testing::MaxAbsDiff(loaded.ubm.diag_vars, models.ubm.diag_vars) == 0.0);
  REQUIRE(loaded.per_language.size() == models.per_language.size());
  for (size_t l = 0; l < loaded.per_language.size(); ++l) {
    CHECK(testing::MaxAbsDiff(loaded.per_language[l].means,
                              models.per_language[l].means) == 0.0);
  }
}
