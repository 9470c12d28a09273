// src/cosine.cc

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

#include "lrfuse/cosine.h"

#include <atomic>
#include <cmath>

#include "lrfuse/io.h"
#include "lrfuse/parallel.h"

namespace lrfuse {

void CosineModel::Save(const std::string& path) const {
  ModelWriter writer(path, "cosine");
  writer.Strings("languages", languages);
  writer.Mat("language_means", language_means);
  writer.Close();
}

CosineModel CosineModel::Load(const std::string& path) {
  ModelReader reader(path, "cosine");
  CosineModel model;
  model.languages = reader.GetStrings("languages");
  model.language_means = reader.GetMatrix("language_means");
  if (model.language_means.rows() !=
      static_cast<Eigen::Index>(model.languages.size()))
    throw ParseError(path + ": language count does not match mean rows");
  return model;
}

CosineModel TrainCosine(const Corpus& train) {
  if (train.languages.size() < 2)
    throw DomainError("cosine: need at least 2 languages");
  for (const std::string& lang : train.languages)
    if (lang == kOutOfSetLabel)
      throw DomainError("cosine: reserved label '" + std::string(kOutOfSetLabel) +
                        "' cannot be enrolled");

  CosineModel model;
  model.languages = train.languages;
  model.language_means =
      RowMatrix::Zero(static_cast<Eigen::Index>(train.languages.size()),
                      train.dim);
  Vector counts = Vector::Zero(static_cast<Eigen::Index>(train.languages.size()));
  for (const IVectorRecord& rec : train.records) {
    if (!rec.labeled()) continue;
    const int l = train.LanguageIndex(rec.label);
    model.language_means.row(l) += rec.vec.transpose();
    counts[l] += 1.0;
  }
  for (Eigen::Index l = 0; l < counts.size(); ++l) {
    if (counts[l] < 1.0)
      throw DomainError("cosine: language '" + model.languages[l] +
                        "' has no records");
    const double norm = model.language_means.row(l).norm();
    if (!(norm > 0.0))
      throw DomainError("cosine: language '" + model.languages[l] +
                        "' averages to the zero vector");
    model.language_means.row(l) /= norm;
  }
  return model;
}

Vector ScoreCosine(const CosineModel& model, const Vector& v) {
  if (v.size() != model.language_means.cols())
    throw DimensionError("cosine: vector dimension mismatch");
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw DomainError("cosine: input vector is not unit norm");
  return model.language_means * v;
}

TrialScoreMatrix ScoreCosineCorpus(const CosineModel& model,
                                   const Corpus& test) {
  if (test.dim != model.language_means.cols())
    throw DimensionError("cosine: corpus dimension mismatch");
  TrialScoreMatrix matrix;
  matrix.kind = ScoreKind::kCosine;
  matrix.languages = model.languages;
  matrix.ids.reserve(test.size());
  matrix.durations.resize(static_cast<Eigen::Index>(test.size()));
  matrix.scores.resize(static_cast<Eigen::Index>(test.size()),
                       model.language_means.rows());
  for (size_t i = 0; i < test.records.size(); ++i) {
    matrix.ids.push_back(test.records[i].id);
    matrix.durations[static_cast<Eigen::Index>(i)] = test.records[i].duration_s;
  }
  std::atomic<bool> bad_norm{false};
  ParallelFor(static_cast<std::ptrdiff_t>(test.size()), [&](auto i) {
    const Vector& v = test.records[i].vec;
    if (std::abs(v.norm() - 1.0) > 1e-9) {
      bad_norm = true;
      return;
    }
    matrix.scores.row(i) = (model.language_means * v).transpose();
  });
  if (bad_norm)
    throw DomainError("cosine: a test vector is not unit norm");
  matrix.Validate();
  return matrix;
}

}  // namespace lrfuse
