// src/fusion_eval.cc

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

#include "lrfuse/fusion_eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "lrfuse/io.h"
#include "lrfuse/parallel.h"

namespace lrfuse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1 + e^z) without overflow on either tail.
double Softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Verifies the score matrices describe the same trials (ids, durations,
// languages) and returns the shared row/column counts.
void CheckAligned(const std::vector<TrialScoreMatrix>& systems) {
  if (systems.empty())
    throw DomainError("fusion_eval: need at least one subsystem matrix");
  for (const TrialScoreMatrix& m : systems) m.Validate();
  if (systems[0].ids.empty())
    throw DomainError("fusion_eval: empty score matrix");
  for (size_t j = 1; j < systems.size(); ++j) {
    if (systems[j].ids != systems[0].ids)
      throw DomainError("fusion_eval: subsystem matrices list different ids");
    if (systems[j].languages != systems[0].languages)
      throw DomainError(
          "fusion_eval: subsystem matrices list different languages");
    if (systems[j].durations != systems[0].durations)
      throw DomainError(
          "fusion_eval: subsystem matrices carry different durations");
  }
}

// Mean cross-entropy and its gradient for the logistic model
// p(target) = sigmoid(feats.row(t) . w + b), evaluated with a deterministic
// blocked reduction over trials.
struct LogisticEval {
  double loss = 0.0;
  Vector grad;
  double grad_b = 0.0;
};

LogisticEval EvalLogistic(const RowMatrix& feats, const Vector& y,
                          const Vector& w, double b) {
  const Eigen::Index t = feats.rows();
  LogisticEval total = BlockedReduce<LogisticEval>(
      t,
      [&] {
        LogisticEval p;
        p.grad = Vector::Zero(w.size());
        return p;
      },
      [&](LogisticEval& p, std::ptrdiff_t begin, std::ptrdiff_t end) {
        const auto block = feats.middleRows(begin, end - begin);
        Vector z = block * w;
        z.array() += b;
        Vector delta(end - begin);
        for (std::ptrdiff_t i = 0; i < end - begin; ++i) {
          const double label = y[begin + i];
          p.loss += Softplus(z[i]) - label * z[i];
          delta[i] = Sigmoid(z[i]) - label;
        }
        p.grad += block.transpose() * delta;
        p.grad_b += delta.sum();
      },
      [](LogisticEval& acc, const LogisticEval& p) {
        acc.loss += p.loss;
        acc.grad += p.grad;
        acc.grad_b += p.grad_b;
      });
  const double inv = 1.0 / static_cast<double>(t);
  total.loss *= inv;
  total.grad *= inv;
  total.grad_b *= inv;
  return total;
}

// Maps a truth label to its class index: languages in order, then the
// out-of-set class at languages.size().
int TruthClass(const std::string& label,
               const std::vector<std::string>& languages) {
  if (label == kOutOfSetLabel) return static_cast<int>(languages.size());
  for (size_t i = 0; i < languages.size(); ++i)
    if (languages[i] == label) return static_cast<int>(i);
  return -1;
}

// Eq.-style average of per-class error rates; `trials`/`errors` are indexed
// by class with the out-of-set class last.  Absent classes contribute zero.
double CostFromCounters(const std::vector<long>& trials,
                        const std::vector<long>& errors, size_t num_langs,
                        const CostParams& params) {
  double in_set_sum = 0.0;
  for (size_t k = 0; k < num_langs; ++k)
    if (trials[k] > 0)
      in_set_sum +=
          static_cast<double>(errors[k]) / static_cast<double>(trials[k]);
  double oos_error = 0.0;
  if (trials[num_langs] > 0)
    oos_error = static_cast<double>(errors[num_langs]) /
                static_cast<double>(trials[num_langs]);
  const double cost =
      (1.0 - params.p_oos) / static_cast<double>(num_langs) * in_set_sum +
      params.p_oos * oos_error;
  return params.scale * cost;
}

void CheckCostParams(const CostParams& params) {
  if (!(params.p_oos >= 0.0 && params.p_oos <= 1.0))
    throw DomainError("fusion_eval: p_oos must lie in [0, 1]");
  if (!(params.scale > 0.0) || !std::isfinite(params.scale))
    throw DomainError("fusion_eval: scale must be positive and finite");
}

}  // namespace

void FusionModel::Validate() const {
  if (subsystem_weights.size() < 1)
    throw DomainError("fusion_eval: fusion model has no subsystem weights");
  if (!subsystem_weights.allFinite() || !std::isfinite(quality_weight) ||
      !std::isfinite(offset))
    throw NumericError("fusion_eval: non-finite fusion parameters");
}

void FusionModel::Save(const std::string& path) const {
  Validate();
  ModelWriter writer(path, "fusion");
  writer.Scalar("quality_weight", quality_weight);
  writer.Scalar("offset", offset);
  writer.Vec("subsystem_weights", subsystem_weights);
  writer.Close();
}

FusionModel FusionModel::Load(const std::string& path) {
  ModelReader reader(path, "fusion");
  FusionModel model;
  model.quality_weight = reader.GetDouble("quality_weight");
  model.offset = reader.GetDouble("offset");
  model.subsystem_weights = reader.GetVector("subsystem_weights");
  model.Validate();
  return model;
}

FusionModel TrainFusion(const std::vector<TrialScoreMatrix>& systems,
                        const std::vector<std::string>& row_labels,
                        const FusionTrainConfig& cfg,
                        FusionTrainReport* report) {
  CheckAligned(systems);
  if (cfg.max_iter < 1)
    throw DomainError("fusion_eval: max_iter must be >= 1");
  if (!(cfg.tol > 0.0))
    throw DomainError("fusion_eval: tol must be positive");
  const Eigen::Index n = systems[0].scores.rows();
  const Eigen::Index num_langs = systems[0].scores.cols();
  const Eigen::Index num_sys = static_cast<Eigen::Index>(systems.size());
  if (static_cast<Eigen::Index>(row_labels.size()) != n)
    throw DimensionError("fusion_eval: " + std::to_string(row_labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(systems[0].durations[i] > 0.0))
      throw DomainError("fusion_eval: non-positive duration for segment " +
                        systems[0].ids[static_cast<size_t>(i)]);

  // One trial per (row, language): subsystem scores plus log duration.
  const Eigen::Index num_feat = num_sys + 1;
  const Eigen::Index num_trials = n * num_langs;
  RowMatrix feats(num_trials, num_feat);
  Vector y(num_trials);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double log_dur = std::log(systems[0].durations[i]);
    for (Eigen::Index l = 0; l < num_langs; ++l) {
      const Eigen::Index t = i * num_langs + l;
      for (Eigen::Index j = 0; j < num_sys; ++j)
        feats(t, j) = systems[static_cast<size_t>(j)].scores(i, l);
      feats(t, num_sys) = log_dur;
      y[t] = row_labels[static_cast<size_t>(i)] ==
                     systems[0].languages[static_cast<size_t>(l)]
                 ? 1.0
                 : 0.0;
    }
  }
  const double positives = y.sum();
  if (positives == 0.0 || positives == static_cast<double>(num_trials))
    throw DomainError(
        "fusion_eval: trials are all one class; cannot fit fusion");

  // Standardize features for conditioning; parameters are mapped back to the
  // raw scale afterwards.
  Vector mean = feats.colwise().mean();
  Vector sd(num_feat);
  for (Eigen::Index f = 0; f < num_feat; ++f) {
    const double var =
        (feats.col(f).array() - mean[f]).square().sum() /
        static_cast<double>(num_trials);
    sd[f] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  for (Eigen::Index f = 0; f < num_feat; ++f)
    feats.col(f) = ((feats.col(f).array() - mean[f]) / sd[f]).matrix();

  Vector w = Vector::Zero(num_feat);
  double b = 0.0;
  LogisticEval cur = EvalLogistic(feats, y, w, b);
  double step = 1.0;
  int iterations = 0;
  bool converged = false;
  for (; iterations < cfg.max_iter; ++iterations) {
    const double grad_norm =
        std::max(cur.grad.cwiseAbs().maxCoeff(), std::abs(cur.grad_b));
    if (grad_norm < cfg.tol) {
      converged = true;
      break;
    }
    const double grad_sq = cur.grad.squaredNorm() + cur.grad_b * cur.grad_b;
    // Gradient step with Armijo backtracking; the accepted step seeds the
    // next iteration's first guess.
    double s = std::min(1.0, step * 2.0);
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      const Vector w_try = w - s * cur.grad;
      const double b_try = b - s * cur.grad_b;
      const LogisticEval trial = EvalLogistic(feats, y, w_try, b_try);
      if (trial.loss <= cur.loss - 0.5 * s * grad_sq) {
        w = w_try;
        b = b_try;
        cur = trial;
        step = s;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;  // no descent left at machine precision
  }

  FusionModel model;
  model.subsystem_weights.resize(num_sys);
  for (Eigen::Index j = 0; j < num_sys; ++j)
    model.subsystem_weights[j] = w[j] / sd[j];
  model.quality_weight = w[num_sys] / sd[num_sys];
  model.offset = b;
  for (Eigen::Index f = 0; f < num_feat; ++f)
    model.offset -= w[f] * mean[f] / sd[f];
  model.Validate();
  if (report != nullptr) {
    report->iterations = iterations;
    report->final_loss = cur.loss;
    report->converged = converged;
  }
  return model;
}

TrialScoreMatrix ApplyFusion(const FusionModel& model,
                             const std::vector<TrialScoreMatrix>& systems) {
  model.Validate();
  CheckAligned(systems);
  if (model.subsystem_weights.size() !=
      static_cast<Eigen::Index>(systems.size()))
    throw DimensionError(
        "fusion_eval: model expects " +
        std::to_string(model.subsystem_weights.size()) + " subsystems, got " +
        std::to_string(systems.size()));
  const Eigen::Index n = systems[0].scores.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(systems[0].durations[i] > 0.0))
      throw DomainError("fusion_eval: non-positive duration for segment " +
                        systems[0].ids[static_cast<size_t>(i)]);

  TrialScoreMatrix out = systems[0];
  out.kind = ScoreKind::kFused;
  out.scores.setConstant(model.offset);
  for (size_t j = 0; j < systems.size(); ++j)
    out.scores +=
        model.subsystem_weights[static_cast<Eigen::Index>(j)] *
        systems[j].scores;
  const Vector quality =
      (model.quality_weight * out.durations.array().log()).matrix();
  out.scores.colwise() += quality;
  out.Validate();
  return out;
}

std::vector<Decision> Decide(const TrialScoreMatrix& matrix,
                             const DecisionPolicy& policy) {
  matrix.Validate();
  if (matrix.ids.empty())
    throw DomainError("fusion_eval: cannot decide on an empty matrix");
  if (!std::isfinite(policy.threshold))
    throw DomainError("fusion_eval: threshold must be finite");
  if (policy.out_label.empty())
    throw DomainError("fusion_eval: empty out-of-set label");

  const Eigen::Index n = matrix.scores.rows();
  std::vector<Decision> decisions(static_cast<size_t>(n));
  ParallelFor(n, [&](std::ptrdiff_t i) {
    Eigen::Index best = 0;
    // maxCoeff returns the first maximal column, which is the tie-break.
    const double top = matrix.scores.row(i).maxCoeff(&best);
    Decision& d = decisions[static_cast<size_t>(i)];
    d.id = matrix.ids[static_cast<size_t>(i)];
    d.label = top > policy.threshold
                  ? matrix.languages[static_cast<size_t>(best)]
                  : policy.out_label;
  });
  return decisions;
}

double ComputeCost(const std::vector<Decision>& decisions,
                   const std::vector<Decision>& truth,
                   const std::vector<std::string>& languages,
                   const CostParams& params) {
  CheckCostParams(params);
  if (languages.empty())
    throw DomainError("fusion_eval: cost needs at least one language class");
  if (decisions.empty())
    throw DomainError("fusion_eval: no decisions to score");

  std::map<std::string, std::string> truth_by_id;
  for (const Decision& t : truth)
    if (!truth_by_id.emplace(t.id, t.label).second)
      throw DomainError("fusion_eval: duplicate truth id " + t.id);

  const size_t num_langs = languages.size();
  std::vector<long> trials(num_langs + 1, 0);
  std::vector<long> errors(num_langs + 1, 0);
  for (const Decision& d : decisions) {
    const auto it = truth_by_id.find(d.id);
    if (it == truth_by_id.end())
      throw DomainError("fusion_eval: no truth label for id " + d.id);
    const int cls = TruthClass(it->second, languages);
    if (cls < 0)
      throw DomainError("fusion_eval: truth label " + it->second +
                        " is not a language class or " + kOutOfSetLabel);
    ++trials[static_cast<size_t>(cls)];
    if (d.label != it->second) ++errors[static_cast<size_t>(cls)];
  }
  for (size_t k = 0; k < num_langs; ++k)
    if (trials[k] == 0)
      std::fprintf(stderr,
                   "fusion_eval: class %s has no trials; it contributes 0 to "
                   "the cost\n",
                   languages[k].c_str());
  if (trials[num_langs] == 0 && params.p_oos > 0.0)
    std::fprintf(stderr,
                 "fusion_eval: no out-of-set trials; the out-of-set term "
                 "contributes 0\n");
  return CostFromCounters(trials, errors, num_langs, params);
}

DecisionPolicy TuneThreshold(const TrialScoreMatrix& matrix,
                             const std::vector<std::string>& row_labels,
                             const CostParams& params, int grid_points) {
  matrix.Validate();
  CheckCostParams(params);
  if (matrix.ids.empty())
    throw DomainError("fusion_eval: cannot tune on an empty matrix");
  if (grid_points < 2)
    throw DomainError("fusion_eval: need at least 2 grid points");
  const Eigen::Index n = matrix.scores.rows();
  if (static_cast<Eigen::Index>(row_labels.size()) != n)
    throw DimensionError("fusion_eval: " + std::to_string(row_labels.size()) +
                         " labels for " + std::to_string(n) + " rows");

  const size_t num_langs = matrix.languages.size();
  std::vector<int> truth_class(static_cast<size_t>(n));
  std::vector<int> argmax_class(static_cast<size_t>(n));
  Vector row_max(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int cls = TruthClass(row_labels[static_cast<size_t>(i)],
                               matrix.languages);
    if (cls < 0)
      throw DomainError("fusion_eval: row label " +
                        row_labels[static_cast<size_t>(i)] +
                        " is not a language class or " + kOutOfSetLabel);
    truth_class[static_cast<size_t>(i)] = cls;
    Eigen::Index best = 0;
    row_max[i] = matrix.scores.row(i).maxCoeff(&best);
    argmax_class[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  std::vector<long> class_trials(num_langs + 1, 0);
  for (Eigen::Index i = 0; i < n; ++i)
    ++class_trials[static_cast<size_t>(truth_class[static_cast<size_t>(i)])];
  for (size_t k = 0; k < num_langs; ++k)
    if (class_trials[k] == 0)
      std::fprintf(stderr,
                   "fusion_eval: class %s has no tuning trials; it "
                   "contributes 0 to the cost\n",
                   matrix.languages[k].c_str());

  // Candidate thresholds: quantiles of the per-row maxima plus one value
  // below the minimum, so the never-reject policy is on the grid.
  std::vector<double> sorted(row_max.data(), row_max.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> candidates;
  candidates.push_back(sorted.front() - 1.0);
  for (int g = 0; g < grid_points; ++g) {
    const double q = static_cast<double>(g) /
                     static_cast<double>(grid_points - 1);
    const auto idx = static_cast<size_t>(
        std::llround(q * static_cast<double>(n - 1)));
    candidates.push_back(sorted[idx]);
  }
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  double best_eta = candidates.front();
  double best_cost = kInf;
  std::vector<long> errors(num_langs + 1);
  for (const double eta : candidates) {
    std::fill(errors.begin(), errors.end(), 0L);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int truth = truth_class[static_cast<size_t>(i)];
      const int decided = row_max[i] > eta
                              ? argmax_class[static_cast<size_t>(i)]
                              : static_cast<int>(num_langs);
      if (decided != truth) ++errors[static_cast<size_t>(truth)];
    }
    const double cost =
        CostFromCounters(class_trials, errors, num_langs, params);
    if (cost < best_cost) {  // strict: ties keep the smallest threshold
      best_cost = cost;
      best_eta = eta;
    }
  }
  DecisionPolicy policy;
  policy.threshold = best_eta;
  return policy;
}

TrialScoreMatrix WithOosProxies(const TrialScoreMatrix& matrix,
                                const std::vector<std::string>& labels,
                                std::vector<std::string>* aug_labels) {
  matrix.Validate();
  const Eigen::Index n = matrix.scores.rows();
  const Eigen::Index num_langs = matrix.scores.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw DimensionError("fusion_eval: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  TrialScoreMatrix out = matrix;
  out.scores.conservativeResize(2 * n, num_langs);
  out.durations.conservativeResize(2 * n);
  aug_labels->assign(labels.begin(), labels.end());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index own = -1;
    for (Eigen::Index l = 0; l < num_langs; ++l)
      if (matrix.languages[static_cast<size_t>(l)] ==
          labels[static_cast<size_t>(i)]) {
        own = l;
        break;
      }
    if (own < 0)
      throw DomainError("fusion_eval: row label " +
                        labels[static_cast<size_t>(i)] +
                        " has no score column to suppress");
    Vector row = matrix.scores.row(i).transpose();
    row[own] = row.minCoeff() - 1.0;
    out.scores.row(n + i) = row.transpose();
    out.durations[n + i] = matrix.durations[i];
    out.ids.push_back(matrix.ids[static_cast<size_t>(i)] + "#oos");
    aug_labels->push_back(kOutOfSetLabel);
  }
  return out;
}

DetCurve ComputeDetFromTrials(const Vector& scores,
                              const std::vector<bool>& is_target) {
  const Eigen::Index n = scores.size();
  if (static_cast<Eigen::Index>(is_target.size()) != n)
    throw DimensionError("fusion_eval: " + std::to_string(is_target.size()) +
                         " trial labels for " + std::to_string(n) + " scores");
  if (!scores.allFinite())
    throw NumericError("fusion_eval: non-finite trial scores");
  long num_targets = 0;
  for (bool t : is_target) num_targets += t ? 1 : 0;
  const long num_nontargets = static_cast<long>(n) - num_targets;
  if (num_targets == 0 || num_nontargets == 0)
    throw DomainError(
        "fusion_eval: DET needs at least one target and one non-target "
        "trial");

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });

  DetCurve curve;
  // Walking thresholds in ascending score order: targets_below counts target
  // trials with score strictly under the current threshold.
  long targets_below = 0;
  long nontargets_below = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    DetPoint point;
    point.threshold = threshold;
    point.miss_rate =
        static_cast<double>(targets_below) / static_cast<double>(num_targets);
    point.fa_rate = static_cast<double>(num_nontargets - nontargets_below) /
                    static_cast<double>(num_nontargets);
    curve.points.push_back(point);
    while (i < order.size() && scores[order[i]] == threshold) {
      if (is_target[static_cast<size_t>(order[i])])
        ++targets_below;
      else
        ++nontargets_below;
      ++i;
    }
  }
  DetPoint top;
  top.threshold = kInf;
  top.miss_rate = 1.0;
  top.fa_rate = 0.0;
  curve.points.push_back(top);

  // The first point sits at (fa 1, miss 0) and the last at (fa 0, miss 1),
  // so miss - fa always crosses zero; interpolate linearly at the crossing.
  curve.eer = 1.0;
  for (size_t p = 0; p + 1 < curve.points.size(); ++p) {
    const DetPoint& a = curve.points[p];
    const DetPoint& bpt = curve.points[p + 1];
    const double da = a.miss_rate - a.fa_rate;
    const double db = bpt.miss_rate - bpt.fa_rate;
    if (da > 0.0) continue;
    if (da == 0.0) {
      curve.eer = a.miss_rate;
      break;
    }
    if (db >= 0.0) {
      const double span = (bpt.miss_rate - a.miss_rate) -
                          (bpt.fa_rate - a.fa_rate);
      const double lambda = span > 0.0 ? -da / span : 0.0;
      curve.eer = a.miss_rate + lambda * (bpt.miss_rate - a.miss_rate);
      break;
    }
  }
  return curve;
}

DetCurve ComputeDet(const TrialScoreMatrix& matrix,
                    const std::vector<std::string>& row_labels) {
  matrix.Validate();
  const Eigen::Index n = matrix.scores.rows();
  const Eigen::Index num_langs = matrix.scores.cols();
  if (static_cast<Eigen::Index>(row_labels.size()) != n)
    throw DimensionError("fusion_eval: " + std::to_string(row_labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  Vector scores(n * num_langs);
  std::vector<bool> is_target(static_cast<size_t>(n * num_langs));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index l = 0; l < num_langs; ++l) {
      const Eigen::Index t = i * num_langs + l;
      scores[t] = matrix.scores(i, l);
      is_target[static_cast<size_t>(t)] =
          row_labels[static_cast<size_t>(i)] ==
          matrix.languages[static_cast<size_t>(l)];
    }
  }
  return ComputeDetFromTrials(scores, is_target);
}

void WriteDetFile(const DetCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "#det v1 points=" << curve.points.size()
      << " eer=" << FormatFloat(curve.eer) << '\n';
  for (const DetPoint& p : curve.points)
    out << FormatFloat(p.threshold) << '\t' << FormatFloat(p.fa_rate) << '\t'
        << FormatFloat(p.miss_rate) << '\n';
  out.flush();
  if (!out) throw IoError("failed while writing " + path);
}

}  // namespace lrfuse
