// src/duration_fusion.cc

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

#include "lrfuse/duration_fusion.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "lrfuse/io.h"
#include "lrfuse/parallel.h"

namespace lrfuse {

namespace {

// Densities this low have already underflowed in the probability domain;
// clamping before the subtraction keeps the ratio finite when only one side
// underflows (exp(-745) is the smallest positive normal double, roughly).
constexpr double kLogDensityFloor = -745.0;

void CheckTwoDimensional(const GmmModel& model, const std::string& what) {
  model.Validate();
  if (model.Dim() != 2)
    throw DomainError("duration_fusion: " + what + " density must be 2-D, is " +
                      std::to_string(model.Dim()) + "-D");
  if (model.covariance_kind != CovarianceKind::kFull)
    throw DomainError("duration_fusion: " + what +
                      " density must use full covariance");
}

void CheckPair(const ScoreDurationPair& pair) {
  if (!std::isfinite(pair.score) || !std::isfinite(pair.log_duration))
    throw NumericError("duration_fusion: non-finite (score, log_dur) pair");
  if (pair.language.empty())
    throw DomainError("duration_fusion: pair without a language name");
}

double LogLrAt(const GmmDensity& target, const GmmDensity& nontarget,
               double score, double log_dur) {
  Vector x(2);
  x << score, log_dur;
  const double log_t = std::max(target.LogLikelihood(x), kLogDensityFloor);
  const double log_n = std::max(nontarget.LogLikelihood(x), kLogDensityFloor);
  return log_t - log_n;
}

int FindLanguage(const std::vector<std::string>& languages,
                 const std::string& name) {
  for (size_t i = 0; i < languages.size(); ++i)
    if (languages[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

void ScoreDurationDensityModel::Validate() const {
  CheckTwoDimensional(universal_target, "universal target");
  CheckTwoDimensional(universal_nontarget, "universal non-target");
  if (!(relevance >= 0.0))
    throw DomainError("duration_fusion: relevance must be >= 0");
  if (per_language_target.size() != languages.size() ||
      per_language_nontarget.size() != languages.size())
    throw DomainError(
        "duration_fusion: per-language model count does not match language "
        "list");
  for (size_t i = 1; i < languages.size(); ++i)
    if (!(languages[i - 1] < languages[i]))
      throw DomainError("duration_fusion: language list not sorted/unique");
  for (size_t i = 0; i < languages.size(); ++i) {
    CheckTwoDimensional(per_language_target[i], languages[i] + " target");
    CheckTwoDimensional(per_language_nontarget[i],
                        languages[i] + " non-target");
    // MAP adaptation never changes the component count, so adapted models
    // must still mirror their universal parent.
    if (per_language_target[i].NumComponents() !=
        universal_target.NumComponents())
      throw DomainError("duration_fusion: " + languages[i] +
                        " target component count differs from universal");
    if (per_language_nontarget[i].NumComponents() !=
        universal_nontarget.NumComponents())
      throw DomainError("duration_fusion: " + languages[i] +
                        " non-target component count differs from universal");
  }
  for (const std::string& name : fallback_languages)
    if (FindLanguage(languages, name) < 0)
      throw DomainError("duration_fusion: fallback language " + name +
                        " not in language list");
}

void ScoreDurationDensityModel::Save(const std::string& path) const {
  Validate();
  ModelWriter writer(path, "score_duration_density");
  writer.Scalar("source", ScoreKindName(source));
  writer.Scalar("relevance", relevance);
  writer.Strings("languages", languages);
  writer.Strings("fallback_languages", fallback_languages);
  WriteGmmBlocks(&writer, "ut_", universal_target);
  WriteGmmBlocks(&writer, "un_", universal_nontarget);
  for (size_t i = 0; i < languages.size(); ++i) {
    WriteGmmBlocks(&writer, "lt" + std::to_string(i) + "_",
                   per_language_target[i]);
    WriteGmmBlocks(&writer, "ln" + std::to_string(i) + "_",
                   per_language_nontarget[i]);
  }
  writer.Close();
}

ScoreDurationDensityModel ScoreDurationDensityModel::Load(
    const std::string& path) {
  ModelReader reader(path, "score_duration_density");
  ScoreDurationDensityModel model;
  model.source = ScoreKindFromName(reader.GetString("source"));
  model.relevance = reader.GetDouble("relevance");
  model.languages = reader.GetStrings("languages");
  model.fallback_languages = reader.GetStrings("fallback_languages");
  model.universal_target = ReadGmmBlocks(reader, "ut_");
  model.universal_nontarget = ReadGmmBlocks(reader, "un_");
  model.per_language_target.reserve(model.languages.size());
  model.per_language_nontarget.reserve(model.languages.size());
  for (size_t i = 0; i < model.languages.size(); ++i) {
    model.per_language_target.push_back(
        ReadGmmBlocks(reader, "lt" + std::to_string(i) + "_"));
    model.per_language_nontarget.push_back(
        ReadGmmBlocks(reader, "ln" + std::to_string(i) + "_"));
  }
  model.Validate();
  return model;
}

RowMatrix PairsToMatrix(const std::vector<ScoreDurationPair>& pairs,
                        bool targets) {
  std::vector<const ScoreDurationPair*> picks;
  for (const ScoreDurationPair& pair : pairs) {
    CheckPair(pair);
    if (pair.target == targets) picks.push_back(&pair);
  }
  RowMatrix out(static_cast<Eigen::Index>(picks.size()), 2);
  for (size_t i = 0; i < picks.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = picks[i]->score;
    out(static_cast<Eigen::Index>(i), 1) = picks[i]->log_duration;
  }
  return out;
}

ScoreDurationDensityModel FitUniversalDensities(
    const std::vector<ScoreDurationPair>& pairs, ScoreKind source,
    const DensityFitConfig& cfg, MmlReport* target_report,
    MmlReport* nontarget_report) {
  if (cfg.c_max < 1)
    throw DomainError("duration_fusion: c_max must be >= 1");
  const RowMatrix targets = PairsToMatrix(pairs, true);
  const RowMatrix nontargets = PairsToMatrix(pairs, false);
  if (targets.rows() < cfg.min_universal)
    throw DomainError("duration_fusion: " + std::to_string(targets.rows()) +
                      " target pairs, need >= " +
                      std::to_string(cfg.min_universal));
  if (nontargets.rows() < cfg.min_universal)
    throw DomainError("duration_fusion: " + std::to_string(nontargets.rows()) +
                      " non-target pairs, need >= " +
                      std::to_string(cfg.min_universal));

  EmConfig em = cfg.em;
  em.covariance_kind = CovarianceKind::kFull;

  ScoreDurationDensityModel model;
  model.source = source;
  model.relevance = cfg.relevance;
  model.universal_target = FitGmmMml(targets, cfg.c_max, em, target_report);
  model.universal_nontarget =
      FitGmmMml(nontargets, cfg.c_max, em, nontarget_report);
  model.Validate();
  return model;
}

void AdaptLanguageDensities(const std::vector<ScoreDurationPair>& pairs,
                            const DensityFitConfig& cfg,
                            ScoreDurationDensityModel* model) {
  model->Validate();
  if (cfg.min_language < 1)
    throw DomainError("duration_fusion: min_language must be >= 1");

  std::set<std::string> names;
  for (const ScoreDurationPair& pair : pairs) {
    CheckPair(pair);
    names.insert(pair.language);
  }
  if (names.empty())
    throw DomainError("duration_fusion: no pairs to adapt from");

  model->languages.assign(names.begin(), names.end());
  model->per_language_target.clear();
  model->per_language_nontarget.clear();
  model->fallback_languages.clear();

  for (const std::string& lang : model->languages) {
    std::vector<ScoreDurationPair> own;
    for (const ScoreDurationPair& pair : pairs)
      if (pair.language == lang) own.push_back(pair);
    const RowMatrix targets = PairsToMatrix(own, true);
    const RowMatrix nontargets = PairsToMatrix(own, false);
    // A language short on either side keeps the universal pair for both: a
    // half-adapted pair would skew its likelihood ratios one way.
    if (targets.rows() < cfg.min_language ||
        nontargets.rows() < cfg.min_language) {
      std::fprintf(stderr,
                   "duration_fusion: language %s has %td target / %td "
                   "non-target pairs (< %d); keeping universal models\n",
                   lang.c_str(), static_cast<std::ptrdiff_t>(targets.rows()),
                   static_cast<std::ptrdiff_t>(nontargets.rows()),
                   cfg.min_language);
      model->fallback_languages.push_back(lang);
      model->per_language_target.push_back(model->universal_target);
      model->per_language_nontarget.push_back(model->universal_nontarget);
      continue;
    }
    model->per_language_target.push_back(
        MapAdapt(model->universal_target, targets, cfg.relevance));
    model->per_language_nontarget.push_back(
        MapAdapt(model->universal_nontarget, nontargets, cfg.relevance));
  }
  model->relevance = cfg.relevance;
  model->Validate();
}

double LrUniversal(const ScoreDurationDensityModel& model, double score,
                   double log_dur) {
  if (!std::isfinite(score) || !std::isfinite(log_dur))
    throw NumericError("duration_fusion: non-finite input to lr");
  const GmmDensity target(model.universal_target);
  const GmmDensity nontarget(model.universal_nontarget);
  return LogLrAt(target, nontarget, score, log_dur);
}

double LrPerLanguage(const ScoreDurationDensityModel& model,
                     const std::string& language, double score,
                     double log_dur) {
  if (!std::isfinite(score) || !std::isfinite(log_dur))
    throw NumericError("duration_fusion: non-finite input to lr");
  const int li = FindLanguage(model.languages, language);
  if (li < 0)
    throw DomainError("duration_fusion: no adapted models for language " +
                      language);
  const GmmDensity target(model.per_language_target[static_cast<size_t>(li)]);
  const GmmDensity nontarget(
      model.per_language_nontarget[static_cast<size_t>(li)]);
  return LogLrAt(target, nontarget, score, log_dur);
}

TrialScoreMatrix TransformScores(const ScoreDurationDensityModel& model,
                                 const TrialScoreMatrix& raw,
                                 bool per_language) {
  model.Validate();
  raw.Validate();
  if (raw.kind != model.source)
    throw DomainError("duration_fusion: matrix kind " +
                      ScoreKindName(raw.kind) + " does not match model source " +
                      ScoreKindName(model.source));
  if (raw.ids.empty())
    throw DomainError("duration_fusion: empty score matrix");
  const Eigen::Index n = raw.scores.rows();
  const Eigen::Index num_langs = raw.scores.cols();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(raw.durations[i] > 0.0))
      throw DomainError("duration_fusion: non-positive duration for segment " +
                        raw.ids[static_cast<size_t>(i)]);
  if (per_language && raw.languages != model.languages)
    throw DomainError(
        "duration_fusion: matrix languages do not match adapted model "
        "languages");

  // One density cache per column (all columns share the universal pair when
  // per-language is off).
  std::vector<std::unique_ptr<GmmDensity>> targets;
  std::vector<std::unique_ptr<GmmDensity>> nontargets;
  for (Eigen::Index l = 0; l < num_langs; ++l) {
    const size_t sl = static_cast<size_t>(l);
    targets.push_back(std::make_unique<GmmDensity>(
        per_language ? model.per_language_target[sl]
                     : model.universal_target));
    nontargets.push_back(std::make_unique<GmmDensity>(
        per_language ? model.per_language_nontarget[sl]
                     : model.universal_nontarget));
  }

  TrialScoreMatrix out = raw;
  out.kind = ScoreKind::kLr;
  ParallelFor(n, [&](std::ptrdiff_t i) {
    const double log_dur = std::log(raw.durations[i]);
    for (Eigen::Index l = 0; l < num_langs; ++l)
      out.scores(i, l) =
          LogLrAt(*targets[static_cast<size_t>(l)],
                  *nontargets[static_cast<size_t>(l)], raw.scores(i, l),
                  log_dur);
  });
  out.Validate();
  return out;
}

}  // namespace lrfuse
