// tests/test_fusion_eval.cc

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
// Fusion training/application, open-set decisions, the average detection
// cost, threshold tuning (against an exhaustive oracle) and DET curves
// (against hand-enumerated points).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "lrfuse/common.h"
#include "lrfuse/fusion_eval.h"
#include "lrfuse/rng.h"
#include "test_util.h"

using namespace lrfuse;
using testing::ScratchDir;
using testing::Slurp;

namespace {

TrialScoreMatrix MakeMatrix(const std::vector<std::string>& languages,
                            const RowMatrix& scores,
                            ScoreKind kind = ScoreKind::kGmm) {
  TrialScoreMatrix m;
  m.languages = languages;
  m.scores = scores;
  m.kind = kind;
  m.durations = Vector::Constant(scores.rows(), 10.0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    m.ids.push_back("seg_" + std::to_string(i));
  return m;
}

// Separable 3-language score matrix: row i's true column carries a clearly
// higher score. Returns the matrix and the row labels.
std::pair<TrialScoreMatrix, std::vector<std::string>> SeparableScores(
    int rows, uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::string> languages = {"aa", "bb", "cc"};
  RowMatrix scores(rows, 3);
  std::vector<std::string> labels;
  for (int i = 0; i < rows; ++i) {
    const int truth = static_cast<int>(rng.Below(3));
    for (int l = 0; l < 3; ++l)
      scores(i, l) = (l == truth ? 2.0 : -2.0) + 0.3 * rng.Normal();
    labels.push_back(languages[static_cast<size_t>(truth)]);
  }
  return {MakeMatrix(languages, scores), labels};
}

std::vector<Decision> TruthFor(const TrialScoreMatrix& matrix,
                               const std::vector<std::string>& labels) {
  std::vector<Decision> truth;
  for (size_t i = 0; i < matrix.ids.size(); ++i)
    truth.push_back({matrix.ids[i], labels[i]});
  return truth;
}

}  // namespace

TEST_CASE("fusion training separates a separable subsystem") {
  const auto [matrix, labels] = SeparableScores(120, 3);
  FusionTrainReport report;
  const FusionModel model =
      TrainFusion({matrix}, labels, FusionTrainConfig(), &report);
  REQUIRE(model.subsystem_weights.size() == 1);
  CHECK(model.subsystem_weights[0] > 0.0);
  CHECK(report.final_loss < 0.3);  // well below the ~0.64 all-prior loss

  // Fused scores keep targets above non-targets.
  const TrialScoreMatrix fused = ApplyFusion(model, {matrix});
  CHECK(fused.kind == ScoreKind::kFused);
  double min_target = 1e300, max_nontarget = -1e300;
  for (Eigen::Index i = 0; i < fused.scores.rows(); ++i) {
    for (Eigen::Index l = 0; l < 3; ++l) {
      const bool target =
          fused.languages[static_cast<size_t>(l)] ==
          labels[static_cast<size_t>(i)];
      if (target)
        min_target = std::min(min_target, fused.scores(i, l));
      else
        max_nontarget = std::max(max_nontarget, fused.scores(i, l));
    }
  }
  CHECK(min_target > max_nontarget);
}

TEST_CASE("fusion training converges on overlapping classes") {
  // Heavy overlap keeps the logistic optimum finite, so the gradient test
  // actually triggers.
  Rng rng(5);
  const std::vector<std::string> languages = {"aa", "bb"};
  RowMatrix scores(150, 2);
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < 150; ++i) {
    const int truth = static_cast<int>(rng.Below(2));
    for (int l = 0; l < 2; ++l)
      scores(i, l) = (l == truth ? 0.5 : -0.5) + 1.5 * rng.Normal();
    labels.push_back(languages[static_cast<size_t>(truth)]);
  }
  FusionTrainReport report;
  const FusionModel model = TrainFusion({MakeMatrix(languages, scores)},
                                        labels, FusionTrainConfig(), &report);
  CHECK(report.converged);
  CHECK(model.subsystem_weights[0] > 0.0);
  CHECK(std::isfinite(report.final_loss));
}

TEST_CASE("duplicated subsystems share the weight symmetrically") {
  const auto [matrix, labels] = SeparableScores(80, 7);
  const FusionModel model = TrainFusion({matrix, matrix}, labels);
  REQUIRE(model.subsystem_weights.size() == 2);
  CHECK(model.subsystem_weights[0] ==
        doctest::Approx(model.subsystem_weights[1]).epsilon(1e-9));
}

TEST_CASE("fusion application follows the linear formula") {
  RowMatrix a(2, 2), b(2, 2);
  a << 1.0, -2.0, 0.5, 3.0;
  b << 0.25, 1.0, -1.5, 2.0;
  TrialScoreMatrix ma = MakeMatrix({"x", "y"}, a);
  TrialScoreMatrix mb = MakeMatrix({"x", "y"}, b, ScoreKind::kDnn);
  ma.durations << std::exp(1.0), std::exp(2.0);
  mb.durations = ma.durations;

  FusionModel model;
  model.subsystem_weights = Vector(2);
  model.subsystem_weights << 0.7, -0.3;
  model.quality_weight = 0.2;
  model.offset = -1.0;

  const TrialScoreMatrix fused = ApplyFusion(model, {ma, mb});
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double logd = static_cast<double>(i) + 1.0;
    for (Eigen::Index l = 0; l < 2; ++l) {
      const double expected =
          0.7 * a(i, l) - 0.3 * b(i, l) + 0.2 * logd - 1.0;
      CHECK(fused.scores(i, l) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("fusion training rejects degenerate trial sets") {
  RowMatrix s(4, 1);
  s << 1.0, 2.0, 3.0, 4.0;
  const TrialScoreMatrix matrix = MakeMatrix({"only"}, s);

  SUBCASE("all targets") {
    const std::vector<std::string> labels(4, "only");
    CHECK_THROWS_AS(TrainFusion({matrix}, labels), DomainError);
  }
  SUBCASE("all non-targets") {
    const std::vector<std::string> labels(4, kOutOfSetLabel);
    CHECK_THROWS_AS(TrainFusion({matrix}, labels), DomainError);
  }
  SUBCASE("mismatched subsystem ids") {
    const auto [ma, labels] = SeparableScores(10, 9);
    TrialScoreMatrix mb = ma;
    mb.ids[2] = "someone_else";
    CHECK_THROWS_AS(TrainFusion({ma, mb}, labels), DomainError);
  }
  SUBCASE("label count mismatch") {
    const auto [ma, labels] = SeparableScores(10, 11);
    std::vector<std::string> short_labels(labels.begin(), labels.end() - 1);
    CHECK_THROWS_AS(TrainFusion({ma}, short_labels), DimensionError);
  }
}

TEST_CASE("decisions claim the argmax language only above the threshold") {
  RowMatrix s(4, 3);
  s << 1.5, 0.2, -0.3,   // clear winner: column 0
      -0.2, -0.9, -0.5,  // max below zero
      0.0, -1.0, -2.0,   // max exactly at the boundary
      0.8, 0.1, 0.8;     // tie between columns 0 and 2
  const TrialScoreMatrix matrix = MakeMatrix({"aa", "bb", "cc"}, s);

  DecisionPolicy policy;
  policy.threshold = 0.0;
  const std::vector<Decision> decisions = Decide(matrix, policy);
  REQUIRE(decisions.size() == 4);
  CHECK(decisions[0].id == "seg_0");
  CHECK(decisions[0].label == "aa");
  CHECK(decisions[1].label == kOutOfSetLabel);
  // A score equal to the threshold does not clear the bar.
  CHECK(decisions[2].label == kOutOfSetLabel);
  // Ties resolve to the first language in column order.
  CHECK(decisions[3].label == "aa");
}

TEST_CASE("extreme finite thresholds give pure argmax or pure rejection") {
  const auto [matrix, labels] = SeparableScores(30, 13);
  DecisionPolicy policy;

  policy.threshold = -1e300;
  for (const Decision& d : Decide(matrix, policy))
    CHECK(d.label != kOutOfSetLabel);

  policy.threshold = 1e300;
  for (const Decision& d : Decide(matrix, policy))
    CHECK(d.label == kOutOfSetLabel);

  policy.threshold = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Decide(matrix, policy), DomainError);
  policy.threshold = -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Decide(matrix, policy), DomainError);
}

TEST_CASE("decisions are invariant under increasing affine score maps") {
  const auto [matrix, labels] = SeparableScores(50, 17);
  DecisionPolicy policy;
  policy.threshold = 0.4;
  const std::vector<Decision> base = Decide(matrix, policy);

  TrialScoreMatrix scaled = matrix;
  scaled.scores = (2.0 * scaled.scores).array() + 3.0;
  DecisionPolicy scaled_policy;
  scaled_policy.threshold = 2.0 * policy.threshold + 3.0;
  const std::vector<Decision> transformed = Decide(scaled, scaled_policy);

  REQUIRE(transformed.size() == base.size());
  for (size_t i = 0; i < base.size(); ++i) {
    CHECK(transformed[i].label == base[i].label);
  }
}

TEST_CASE("the average detection cost matches hand-worked cases") {
  const std::vector<std::string> languages = {"aa", "bb"};
  CostParams params;  // p_oos = 0.23, scale = 100

  SUBCASE("perfect decisions cost nothing") {
    std::vector<Decision> truth = {{"s1", "aa"}, {"s2", "bb"},
                                   {"s3", kOutOfSetLabel}};
    CHECK(ComputeCost(truth, truth, languages, params) == 0.0);
  }
  SUBCASE("uniformly wrong decisions cost the full scale") {
    std::vector<Decision> truth = {{"s1", "aa"}, {"s2", "bb"},
                                   {"s3", kOutOfSetLabel}};
    std::vector<Decision> decisions = {
        {"s1", "bb"}, {"s2", kOutOfSetLabel}, {"s3", "aa"}};
    CHECK(ComputeCost(decisions, truth, languages, params) ==
          doctest::Approx(100.0).epsilon(1e-12));
  }
  SUBCASE("a half-wrong class and a missed out-of-set segment") {
    // P_err(aa) = 1/2, P_err(bb) = 0, P_err(oos) = 1:
    // 100 * (0.77/2 * (0.5 + 0) + 0.23 * 1) = 42.25.
    std::vector<Decision> truth = {{"s1", "aa"},
                                   {"s2", "aa"},
                                   {"s3", "bb"},
                                   {"s4", kOutOfSetLabel}};
    std::vector<Decision> decisions = {
        {"s1", "aa"}, {"s2", "bb"}, {"s3", "bb"}, {"s4", "aa"}};
    const double cost = ComputeCost(decisions, truth, languages, params);
    CHECK(cost == doctest::Approx(42.25).epsilon(1e-12));
  }
  SUBCASE("random decision sets match a direct tally oracle") {
    Rng rng(23);
    const std::vector<std::string> langs3 = {"aa", "bb", "cc"};
    std::vector<std::string> pool = langs3;
    pool.push_back(kOutOfSetLabel);
    for (int instance = 0; instance < 100; ++instance) {
      const int n = 5 + static_cast<int>(rng.Below(40));
      std::vector<Decision> truth, decisions;
      for (int i = 0; i < n; ++i) {
        const std::string id = "r" + std::to_string(i);
        truth.push_back({id, pool[rng.Below(pool.size())]});
        decisions.push_back({id, pool[rng.Below(pool.size())]});
      }
      // Oracle: tally per-class error fractions directly.
      std::map<std::string, std::pair<int, int>> tally;  // label -> (wrong, n)
      for (int i = 0; i < n; ++i) {
        auto& t = tally[truth[static_cast<size_t>(i)].label];
        t.second += 1;
        if (decisions[static_cast<size_t>(i)].label !=
            truth[static_cast<size_t>(i)].label)
          t.first += 1;
      }
      auto err = [&](const std::string& label) {
        const auto it = tally.find(label);
        if (it == tally.end() || it->second.second == 0) return 0.0;
        return static_cast<double>(it->second.first) / it->second.second;
      };
      double expected = 0.0;
      for (const std::string& lang : langs3) expected += err(lang);
      expected = params.scale * ((1.0 - params.p_oos) / 3.0 * expected +
                                 params.p_oos * err(kOutOfSetLabel));
      const double got = ComputeCost(decisions, truth, langs3, params);
      CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("missing truth ids are rejected") {
    std::vector<Decision> truth = {{"s1", "aa"}};
    std::vector<Decision> decisions = {{"s1", "aa"}, {"s2", "bb"}};
    CHECK_THROWS_AS(ComputeCost(decisions, truth, languages, params),
                    DomainError);
  }
  SUBCASE("truth labels outside the class set are rejected") {
    std::vector<Decision> truth = {{"s1", "zz"}};
    std::vector<Decision> decisions = {{"s1", "aa"}};
    CHECK_THROWS_AS(ComputeCost(decisions, truth, languages, params),
                    DomainError);
  }
  SUBCASE("duplicate truth ids are rejected") {
    std::vector<Decision> truth = {{"s1", "aa"}, {"s1", "aa"}};
    std::vector<Decision> decisions = {{"s1", "aa"}};
    CHECK_THROWS_AS(ComputeCost(decisions, truth, languages, params),
                    DomainError);
  }
  SUBCASE("invalid parameters are rejected") {
    std::vector<Decision> truth = {{"s1", "aa"}};
    CostParams bad;
    bad.p_oos = 1.5;
    CHECK_THROWS_AS(ComputeCost(truth, truth, languages, bad), DomainError);
    bad = CostParams();
    bad.scale = 0.0;
    CHECK_THROWS_AS(ComputeCost(truth, truth, languages, bad), DomainError);
  }
}

TEST_CASE("threshold tuning") {
  CostParams params;

  SUBCASE("separable scores tune to zero cost") {
    Rng rng(31);
    const std::vector<std::string> languages = {"aa", "bb", "cc"};
    RowMatrix s(40, 3);
    std::vector<std::string> labels;
    for (Eigen::Index i = 0; i < 40; ++i) {
      if (i < 30) {
        const int truth = static_cast<int>(rng.Below(3));
        for (int l = 0; l < 3; ++l)
          s(i, l) = l == truth ? rng.Uniform(1.0, 2.0)
                               : rng.Uniform(-4.0, -3.0);
        labels.push_back(languages[static_cast<size_t>(truth)]);
      } else {
        // True out-of-set rows: every model scores low.
        for (int l = 0; l < 3; ++l) s(i, l) = rng.Uniform(-2.0, -1.0);
        labels.push_back(kOutOfSetLabel);
      }
    }
    const TrialScoreMatrix matrix = MakeMatrix(languages, s);
    const DecisionPolicy policy = TuneThreshold(matrix, labels, params);
    const double cost = ComputeCost(Decide(matrix, policy),
                                    TruthFor(matrix, labels), languages,
                                    params);
    CHECK(cost == 0.0);
    CHECK(policy.threshold >= -1.0);
    CHECK(policy.threshold < 1.0);
  }
  SUBCASE("constant scores fall back to the never-reject end") {
    const std::vector<std::string> languages = {"aa", "bb", "cc"};
    RowMatrix s = RowMatrix::Zero(9, 3);
    std::vector<std::string> labels;
    for (int i = 0; i < 9; ++i)
      labels.push_back(i < 8 ? languages[static_cast<size_t>(i % 3)]
                             : kOutOfSetLabel);
    const TrialScoreMatrix matrix = MakeMatrix(languages, s);
    const DecisionPolicy policy = TuneThreshold(matrix, labels, params);
    // Candidates are {-1, 0}; accepting everything (threshold -1, argmax
    // lands on column aa) beats rejecting everything.
    CHECK(policy.threshold == -1.0);
  }
  SUBCASE("tuning matches an exhaustive search over row maxima") {
    Rng rng(37);
    const std::vector<std::string> languages = {"aa", "bb", "cc"};
    std::vector<std::string> pool = languages;
    pool.push_back(kOutOfSetLabel);
    RowMatrix s(50, 3);
    std::vector<std::string> labels;
    for (Eigen::Index i = 0; i < 50; ++i) {
      for (int l = 0; l < 3; ++l) s(i, l) = rng.Uniform(-3.0, 3.0);
      labels.push_back(pool[rng.Below(pool.size())]);
    }
    const TrialScoreMatrix matrix = MakeMatrix(languages, s);
    const std::vector<Decision> truth = TruthFor(matrix, labels);

    const DecisionPolicy tuned = TuneThreshold(matrix, labels, params, 512);
    const double tuned_cost = ComputeCost(Decide(matrix, tuned), truth,
                                          languages, params);

    // Oracle: try every row maximum plus one point below the smallest.
    std::vector<double> candidates;
    for (Eigen::Index i = 0; i < 50; ++i)
      candidates.push_back(s.row(i).maxCoeff());
    candidates.push_back(
        *std::min_element(candidates.begin(), candidates.end()) - 1.0);
    double best_cost = 1e300, best_threshold = 0.0;
    std::sort(candidates.begin(), candidates.end());
    for (const double threshold : candidates) {
      DecisionPolicy policy;
      policy.threshold = threshold;
      const double cost =
          ComputeCost(Decide(matrix, policy), truth, languages, params);
      if (cost < best_cost) {
        best_cost = cost;
        best_threshold = threshold;
      }
    }
    CHECK(tuned_cost == doctest::Approx(best_cost).epsilon(1e-12));
    CHECK(tuned.threshold == best_threshold);
  }
}

TEST_CASE("synthetic out-of-set proxies push the own score below the row") {
  RowMatrix s(3, 2);
  s << 0.5, -1.0, -2.0, 1.5, 0.25, 0.75;
  const TrialScoreMatrix matrix = MakeMatrix({"aa", "bb"}, s);
  const std::vector<std::string> labels = {"aa", "bb", "aa"};

  std::vector<std::string> aug_labels;
  const TrialScoreMatrix out = WithOosProxies(matrix, labels, &aug_labels);

  REQUIRE(out.scores.rows() == 6);
  REQUIRE(aug_labels.size() == 6);
  for (int i = 0; i < 3; ++i) {
    CHECK(aug_labels[static_cast<size_t>(i)] == labels[static_cast<size_t>(i)]);
    CHECK(aug_labels[static_cast<size_t>(i + 3)] == kOutOfSetLabel);
    CHECK(out.ids[static_cast<size_t>(i)] == matrix.ids[static_cast<size_t>(i)]);
    CHECK(out.ids[static_cast<size_t>(i + 3)] ==
          matrix.ids[static_cast<size_t>(i)] + "#oos");
    // Original rows are untouched.
    CHECK((out.scores.row(i) - s.row(i)).cwiseAbs().maxCoeff() == 0.0);
  }
  // Proxy rows: own column dropped below the row minimum, others kept.
  CHECK(out.scores(3, 0) == s.row(0).minCoeff() - 1.0);
  CHECK(out.scores(3, 1) == s(0, 1));
  CHECK(out.scores(4, 1) == s.row(1).minCoeff() - 1.0);
  CHECK(out.scores(4, 0) == s(1, 0));
  CHECK(out.scores(5, 0) == s.row(2).minCoeff() - 1.0);
  CHECK(out.scores(5, 1) == s(2, 1));

  SUBCASE("labels without a column are rejected") {
    std::vector<std::string> bad = labels;
    bad[1] = "zz";
    std::vector<std::string> unused;
    CHECK_THROWS_AS(WithOosProxies(matrix, bad, &unused), DomainError);
  }
}

TEST_CASE("DET curves") {
  SUBCASE("a hand-enumerated six-trial curve") {
    Vector scores(6);
    scores << 0.9, 0.8, 0.7, 0.5, 0.4, 0.1;
    const std::vector<bool> is_target = {true, false, true,
                                         true, false, false};
    const DetCurve curve = ComputeDetFromTrials(scores, is_target);

    // Thresholds: every distinct score ascending, then +infinity.
    REQUIRE(curve.points.size() == 7);
    const double expected[7][3] = {
        // threshold, fa, miss
        {0.1, 1.0, 0.0},       {0.4, 2.0 / 3.0, 0.0},
        {0.5, 1.0 / 3.0, 0.0}, {0.7, 1.0 / 3.0, 1.0 / 3.0},
        {0.8, 1.0 / 3.0, 2.0 / 3.0}, {0.9, 0.0, 2.0 / 3.0},
        {0.0, 0.0, 1.0},  // +infinity
    };
    for (size_t k = 0; k < 6; ++k) {
      CHECK(curve.points[k].threshold == expected[k][0]);
      CHECK(curve.points[k].fa_rate ==
            doctest::Approx(expected[k][1]).epsilon(1e-12));
      CHECK(curve.points[k].miss_rate ==
            doctest::Approx(expected[k][2]).epsilon(1e-12));
    }
    CHECK(std::isinf(curve.points.back().threshold));
    CHECK(curve.points.back().miss_rate == 1.0);
    CHECK(curve.points.back().fa_rate == 0.0);
    // The curves cross exactly at the (1/3, 1/3) point.
    CHECK(curve.eer == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("perfectly separated trials reach zero error") {
    Vector scores(6);
    scores << 3.0, 2.5, 2.0, -1.0, -1.5, -2.0;
    const std::vector<bool> is_target = {true, true, true,
                                         false, false, false};
    const DetCurve curve = ComputeDetFromTrials(scores, is_target);
    CHECK(curve.eer == 0.0);
    bool has_origin = false;
    for (const DetPoint& p : curve.points)
      if (p.fa_rate == 0.0 && p.miss_rate == 0.0) has_origin = true;
    CHECK(has_origin);
  }
  SUBCASE("identical scores give the chance diagonal") {
    Vector scores = Vector::Constant(10, 0.5);
    std::vector<bool> is_target(10, false);
    for (int i = 0; i < 5; ++i) is_target[static_cast<size_t>(i)] = true;
    const DetCurve curve = ComputeDetFromTrials(scores, is_target);
    REQUIRE(curve.points.size() == 2);
    CHECK(curve.eer == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("rates are monotone along the threshold sweep") {
    Rng rng(41);
    Vector scores(200);
    std::vector<bool> is_target;
    for (Eigen::Index i = 0; i < 200; ++i) {
      // Coarse quantization forces plenty of tied scores.
      scores[i] = std::floor(rng.Uniform(-3.0, 3.0) * 4.0) / 4.0 +
                  (i % 2 == 0 ? 0.5 : 0.0);
      is_target.push_back(rng.Below(2) == 0);
    }
    // Ensure both classes are present.
    is_target[0] = true;
    is_target[1] = false;
    const DetCurve curve = ComputeDetFromTrials(scores, is_target);
    for (size_t k = 1; k < curve.points.size(); ++k) {
      CHECK(curve.points[k].threshold > curve.points[k - 1].threshold);
      CHECK(curve.points[k].miss_rate >= curve.points[k - 1].miss_rate);
      CHECK(curve.points[k].fa_rate <= curve.points[k - 1].fa_rate);
    }
    CHECK(curve.eer >= 0.0);
    CHECK(curve.eer <= 1.0);
  }
  SUBCASE("single-class trial sets are rejected") {
    Vector scores(3);
    scores << 1.0, 2.0, 3.0;
    CHECK_THROWS_AS(ComputeDetFromTrials(scores, {true, true, true}),
                    DomainError);
    CHECK_THROWS_AS(ComputeDetFromTrials(scores, {false, false, false}),
                    DomainError);
  }
  SUBCASE("matrix flattening marks out-of-set rows as pure non-targets") {
    const auto [matrix, labels_in] = SeparableScores(20, 47);
    std::vector<std::string> labels = labels_in;
    labels[0] = kOutOfSetLabel;
    labels[5] = kOutOfSetLabel;
    const DetCurve from_matrix = ComputeDet(matrix, labels);

    // Manual flattening.
    const Eigen::Index n = matrix.scores.rows();
    Vector flat(n * 3);
    std::vector<bool> is_target;
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index l = 0; l < 3; ++l, ++k) {
        flat[k] = matrix.scores(i, l);
        is_target.push_back(matrix.languages[static_cast<size_t>(l)] ==
                            labels[static_cast<size_t>(i)]);
      }
    }
    const DetCurve direct = ComputeDetFromTrials(flat, is_target);
    CHECK(from_matrix.eer == direct.eer);
    REQUIRE(from_matrix.points.size() == direct.points.size());
    for (size_t p = 0; p < direct.points.size(); ++p) {
      CHECK(from_matrix.points[p].fa_rate == direct.points[p].fa_rate);
      CHECK(from_matrix.points[p].miss_rate == direct.points[p].miss_rate);
    }
  }
}

TEST_CASE("DET files carry the header, the EER and every point") {
  ScratchDir dir("det_file");
  Vector scores(4);
  scores << 2.0, 1.0, -1.0, -2.0;
  const DetCurve curve =
      ComputeDetFromTrials(scores, {true, true, false, false});
  const std::string path = dir.Path("curve.det");
  WriteDetFile(curve, path);
  const std::string text = Slurp(path);
  CHECK(text.find("#det v1") != std::string::npos);
  CHECK(text.find("eer=") != std::string::npos);
  // One line per point plus header material.
  size_t rows = 0;
  for (const char c : text)
    if (c == '\n') ++rows;
  CHECK(rows >= curve.points.size());
}

TEST_CASE("fusion models reload bit-exactly and validate") {
  ScratchDir dir("fusion_model");
  FusionModel model;
  model.subsystem_weights = Vector(2);
  model.subsystem_weights << 1.25, -0.5;
  model.quality_weight = 0.125;
  model.offset = -2.75;
  model.Save(dir.Path("fuse.model"));
  const FusionModel loaded = FusionModel::Load(dir.Path("fuse.model"));
  CHECK((loaded.subsystem_weights - model.subsystem_weights)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(loaded.quality_weight == model.quality_weight);
  CHECK(loaded.offset == model.offset);

  FusionModel empty;
  empty.subsystem_weights = Vector(0);
  CHECK_THROWS_AS(empty.Validate(), DomainError);
}
