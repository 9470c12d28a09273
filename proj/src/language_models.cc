// src/language_models.cc

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

#include "lrfuse/language_models.h"

#include <cmath>
#include <string>
#include <vector>

#include "lrfuse/io.h"
#include "lrfuse/parallel.h"

namespace lrfuse {

namespace {

// Rows of `data` whose record label equals `label`, stacked in corpus order.
RowMatrix RowsOfLanguage(const Corpus& corpus, const RowMatrix& data,
                         const std::string& label) {
  std::vector<Eigen::Index> picks;
  for (size_t i = 0; i < corpus.records.size(); ++i)
    if (corpus.records[i].label == label)
      picks.push_back(static_cast<Eigen::Index>(i));
  RowMatrix out(static_cast<Eigen::Index>(picks.size()), data.cols());
  for (size_t i = 0; i < picks.size(); ++i) out.row(i) = data.row(picks[i]);
  return out;
}

void CheckCorpusDim(const Corpus& corpus, Eigen::Index dim,
                    const std::string& what) {
  if (corpus.records.empty())
    throw DomainError("language_models: " + what + " corpus is empty");
  if (corpus.dim != dim)
    throw DimensionError("language_models: " + what + " dimension " +
                         std::to_string(corpus.dim) + " does not match model " +
                         std::to_string(dim));
}

}  // namespace

void LanguageModelSet::Validate() const {
  ubm.Validate();
  if (languages.empty())
    throw DomainError("language_models: no languages");
  if (per_language.size() != languages.size())
    throw DomainError("language_models: " + std::to_string(languages.size()) +
                      " languages but " + std::to_string(per_language.size()) +
                      " models");
  if (!(relevance >= 0.0))
    throw DomainError("language_models: relevance must be >= 0");
  for (size_t i = 0; i < per_language.size(); ++i) {
    const GmmModel& m = per_language[i];
    m.Validate();
    if (m.NumComponents() != ubm.NumComponents() || m.Dim() != ubm.Dim() ||
        m.covariance_kind != ubm.covariance_kind)
      throw DomainError("language_models: model for " + languages[i] +
                        " does not match the background model's shape");
  }
  for (size_t i = 1; i < languages.size(); ++i)
    if (!(languages[i - 1] < languages[i]))
      throw DomainError("language_models: language list not sorted/unique");
}

void LanguageModelSet::Save(const std::string& path) const {
  Validate();
  ModelWriter writer(path, "language_models");
  writer.Scalar("relevance", relevance);
  // Token "-" stands in for an empty preprocessing note (values must be
  // whitespace-free).
  writer.Scalar("preprocessing", preprocessing.empty() ? "-" : preprocessing);
  writer.Strings("languages", languages);
  WriteGmmBlocks(&writer, "ubm_", ubm);
  for (size_t i = 0; i < per_language.size(); ++i)
    WriteGmmBlocks(&writer, "lang" + std::to_string(i) + "_", per_language[i]);
  writer.Close();
}

LanguageModelSet LanguageModelSet::Load(const std::string& path) {
  ModelReader reader(path, "language_models");
  LanguageModelSet set;
  set.relevance = reader.GetDouble("relevance");
  set.preprocessing = reader.GetString("preprocessing");
  if (set.preprocessing == "-") set.preprocessing.clear();
  set.languages = reader.GetStrings("languages");
  set.ubm = ReadGmmBlocks(reader, "ubm_");
  set.per_language.reserve(set.languages.size());
  for (size_t i = 0; i < set.languages.size(); ++i)
    set.per_language.push_back(
        ReadGmmBlocks(reader, "lang" + std::to_string(i) + "_"));
  set.Validate();
  return set;
}

LanguageModelSet TrainLanguageModels(const Corpus& dev, const Corpus& train,
                                     const GmmSubsystemConfig& cfg) {
  if (dev.records.empty())
    throw DomainError("language_models: dev corpus is empty");
  if (train.records.empty())
    throw DomainError("language_models: train corpus is empty");
  if (dev.dim != train.dim)
    throw DimensionError("language_models: dev dimension " +
                         std::to_string(dev.dim) + " != train dimension " +
                         std::to_string(train.dim));
  if (cfg.num_components < 1)
    throw DomainError("language_models: num_components must be >= 1");
  if (!(cfg.relevance >= 0.0))
    throw DomainError("language_models: relevance must be >= 0");
  for (const IVectorRecord& rec : train.records) {
    if (!rec.labeled())
      throw DomainError("language_models: unlabeled training record " +
                        rec.id);
    if (rec.label == kOutOfSetLabel)
      throw DomainError(std::string("language_models: '") + kOutOfSetLabel +
                        "' cannot be enrolled as a language");
  }
  if (train.languages.empty())
    throw DomainError("language_models: train corpus lists no languages");

  LanguageModelSet set;
  set.languages = train.languages;
  set.relevance = cfg.relevance;

  EmConfig em = cfg.em;
  set.ubm = FitGmmEm(dev.Data(), cfg.num_components, em);

  const GmmDensity ubm_density(set.ubm);
  const RowMatrix train_data = train.Data();
  set.per_language.reserve(set.languages.size());
  for (const std::string& lang : set.languages) {
    const RowMatrix rows = RowsOfLanguage(train, train_data, lang);
    if (rows.rows() == 0)
      throw DomainError("language_models: language " + lang +
                        " has no training records");
    const MapStats stats = AccumulateMapStats(ubm_density, rows);
    set.per_language.push_back(
        MapAdaptFromStats(set.ubm, stats, cfg.relevance));
  }
  set.Validate();
  return set;
}

TrialScoreMatrix ScoreGmm(const LanguageModelSet& models, const Corpus& test) {
  models.Validate();
  CheckCorpusDim(test, models.ubm.Dim(), "test");

  const RowMatrix data = test.Data();
  const Eigen::Index n = data.rows();
  const Eigen::Index num_langs =
      static_cast<Eigen::Index>(models.languages.size());

  const GmmDensity ubm_density(models.ubm);
  const Vector ubm_ll = ubm_density.BatchLogLikelihood(data);

  TrialScoreMatrix out;
  out.languages = models.languages;
  out.kind = ScoreKind::kGmm;
  out.scores.resize(n, num_langs);
  out.ids.reserve(test.records.size());
  out.durations.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.ids.push_back(test.records[static_cast<size_t>(i)].id);
    out.durations[i] = test.records[static_cast<size_t>(i)].duration_s;
  }
  for (Eigen::Index l = 0; l < num_langs; ++l) {
    const GmmDensity lang_density(models.per_language[static_cast<size_t>(l)]);
    out.scores.col(l) = lang_density.BatchLogLikelihood(data) - ubm_ll;
  }
  out.Validate();
  return out;
}

LooResult LooScores(const LanguageModelSet& models, const Corpus& train) {
  models.Validate();
  CheckCorpusDim(train, models.ubm.Dim(), "train");

  const Eigen::Index n = static_cast<Eigen::Index>(train.records.size());
  const Eigen::Index num_langs =
      static_cast<Eigen::Index>(models.languages.size());
  const Eigen::Index c = models.ubm.NumComponents();
  const Eigen::Index d = models.ubm.Dim();

  // Every record must name a modeled language, and every language needs at
  // least two records so an exclusion still leaves adaptation data.
  std::vector<int> lang_of_row(static_cast<size_t>(n), -1);
  std::vector<Eigen::Index> lang_count(models.languages.size(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const IVectorRecord& rec = train.records[static_cast<size_t>(i)];
    if (!rec.labeled())
      throw DomainError("language_models: unlabeled training record " +
                        rec.id);
    int li = -1;
    for (size_t j = 0; j < models.languages.size(); ++j)
      if (models.languages[j] == rec.label) {
        li = static_cast<int>(j);
        break;
      }
    if (li < 0)
      throw DomainError("language_models: record " + rec.id + " has label " +
                        rec.label + " with no language model");
    lang_of_row[static_cast<size_t>(i)] = li;
    ++lang_count[static_cast<size_t>(li)];
  }
  for (size_t j = 0; j < models.languages.size(); ++j)
    if (lang_count[j] < 2)
      throw DomainError("language_models: language " + models.languages[j] +
                        " needs >= 2 records for leave-one-out, has " +
                        std::to_string(lang_count[j]));

  const RowMatrix data = train.Data();
  const GmmDensity ubm_density(models.ubm);
  const Vector ubm_ll = ubm_density.BatchLogLikelihood(data);

  // One pass of background-model responsibilities; these are exactly the
  // statistics MAP adaptation consumed, so removing a row's (gamma, gamma*x)
  // from its language total reproduces the model fit without that row.
  RowMatrix gamma(n, c);
  ParallelFor(n, [&](std::ptrdiff_t i) {
    gamma.row(i) = ubm_density.Responsibilities(data.row(i).transpose());
  });

  std::vector<MapStats> lang_stats;
  lang_stats.reserve(models.languages.size());
  for (size_t j = 0; j < models.languages.size(); ++j)
    lang_stats.push_back(MapStats::Zero(c, d));
  for (Eigen::Index i = 0; i < n; ++i)
    lang_stats[static_cast<size_t>(lang_of_row[static_cast<size_t>(i)])].Add(
        gamma.row(i).transpose(), data.row(i).transpose());

  // Full-data adapted models score every non-target column; they match the
  // training-time models because both derive from the same statistics.
  LooResult result;
  result.matrix.languages = models.languages;
  result.matrix.kind = ScoreKind::kGmm;
  result.matrix.scores.resize(n, num_langs);
  result.matrix.ids.reserve(train.records.size());
  result.matrix.durations.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    result.matrix.ids.push_back(train.records[static_cast<size_t>(i)].id);
    result.matrix.durations[i] =
        train.records[static_cast<size_t>(i)].duration_s;
  }
  for (Eigen::Index l = 0; l < num_langs; ++l) {
    const GmmModel full = MapAdaptFromStats(
        models.ubm, lang_stats[static_cast<size_t>(l)], models.relevance);
    const GmmDensity full_density(full);
    result.matrix.scores.col(l) = full_density.BatchLogLikelihood(data) - ubm_ll;
  }

  // Fix each row's own-language column: rebuild that language's model with
  // the row's statistics subtracted, then rescore just that entry.
  ParallelFor(n, [&](std::ptrdiff_t i) {
    const int li = lang_of_row[static_cast<size_t>(i)];
    MapStats held_out = lang_stats[static_cast<size_t>(li)];
    held_out.Subtract(gamma.row(i).transpose(), data.row(i).transpose());
    const GmmModel reduced =
        MapAdaptFromStats(models.ubm, held_out, models.relevance);
    const GmmDensity reduced_density(reduced);
    result.matrix.scores(i, li) =
        reduced_density.LogLikelihood(data.row(i).transpose()) - ubm_ll[i];
  });
  result.matrix.Validate();

  std::vector<std::string> row_labels;
  row_labels.reserve(train.records.size());
  for (const IVectorRecord& rec : train.records) row_labels.push_back(rec.label);
  result.pairs = MatrixToPairs(result.matrix, row_labels);
  return result;
}

std::vector<ScoreDurationPair> MatrixToPairs(
    const TrialScoreMatrix& matrix,
    const std::vector<std::string>& row_labels) {
  matrix.Validate();
  if (row_labels.size() != matrix.ids.size())
    throw DimensionError("language_models: " +
                         std::to_string(row_labels.size()) + " labels for " +
                         std::to_string(matrix.ids.size()) + " score rows");
  const Eigen::Index n = matrix.scores.rows();
  const Eigen::Index num_langs = matrix.scores.cols();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(matrix.durations[i] > 0.0))
      throw DomainError("language_models: non-positive duration for segment " +
                        matrix.ids[static_cast<size_t>(i)]);

  std::vector<ScoreDurationPair> pairs;
  pairs.reserve(static_cast<size_t>(n * num_langs));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double log_dur = std::log(matrix.durations[i]);
    for (Eigen::Index l = 0; l < num_langs; ++l) {
      ScoreDurationPair pair;
      pair.score = matrix.scores(i, l);
      pair.log_duration = log_dur;
      pair.language = matrix.languages[static_cast<size_t>(l)];
      pair.target = row_labels[static_cast<size_t>(i)] == pair.language;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

}  // namespace lrfuse
