// src/pipeline.cc

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

#include "lrfuse/pipeline.h"

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lrfuse/cosine.h"
#include "lrfuse/io.h"
#include "lrfuse/preprocess.h"

namespace lrfuse {

namespace {

std::string Trimmed(const std::string& s) {
  const size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double ParseDoubleValue(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError("pipeline config: bad number '" + value + "' for " + key);
  return v;
}

long long ParseIntValue(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError("pipeline config: bad integer '" + value + "' for " +
                     key);
  return v;
}

uint64_t ParseSeedValue(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError("pipeline config: bad seed '" + value + "' for " + key);
  return static_cast<uint64_t>(v);
}

// "count:spread,count:spread,..." -> cluster list.
std::vector<ClusterSpec> ParseClusterList(const std::string& value) {
  std::vector<ClusterSpec> clusters;
  size_t pos = 0;
  while (pos <= value.size()) {
    size_t comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    const std::string item = Trimmed(value.substr(pos, comma - pos));
    const size_t colon = item.find(':');
    if (item.empty() || colon == std::string::npos)
      throw ParseError("pipeline config: cluster item '" + item +
                       "' is not count:spread");
    ClusterSpec c;
    c.num_languages = static_cast<int>(
        ParseIntValue("synth.clusters", item.substr(0, colon)));
    c.spread = ParseDoubleValue("synth.clusters", item.substr(colon + 1));
    clusters.push_back(c);
    pos = comma + 1;
  }
  return clusters;
}

std::string FormatClusterList(const std::vector<ClusterSpec>& clusters) {
  std::string out;
  for (size_t i = 0; i < clusters.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(clusters[i].num_languages) + ':' +
           FormatFloat(clusters[i].spread);
  }
  return out;
}

std::vector<int> ParseIntList(const std::string& key,
                              const std::string& value) {
  std::vector<int> items;
  if (Trimmed(value).empty()) return items;
  size_t pos = 0;
  while (pos <= value.size()) {
    size_t comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    items.push_back(static_cast<int>(
        ParseIntValue(key, Trimmed(value.substr(pos, comma - pos)))));
    pos = comma + 1;
  }
  return items;
}

std::string FormatIntList(const std::vector<int>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(items[i]);
  }
  return out;
}

std::string PathIn(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// Tunes the threshold on the (proxy-augmented) tuning scores, decides and
// scores the test matrix, and writes the per-system artifacts.
SystemResult EvaluateSystem(const std::string& name,
                            const TrialScoreMatrix& test_scores,
                            const TrialScoreMatrix& tune_scores,
                            const std::vector<std::string>& tune_labels,
                            const std::vector<Decision>& truth,
                            const std::vector<std::string>& test_labels,
                            const PipelineConfig& cfg,
                            const std::string& out_dir) {
  std::vector<std::string> aug_labels;
  const TrialScoreMatrix aug =
      WithOosProxies(tune_scores, tune_labels, &aug_labels);
  const DecisionPolicy policy =
      TuneThreshold(aug, aug_labels, cfg.cost, cfg.grid_points);
  const std::vector<Decision> decisions = Decide(test_scores, policy);
  const double cost =
      ComputeCost(decisions, truth, test_scores.languages, cfg.cost);
  const DetCurve det = ComputeDet(test_scores, test_labels);

  WriteScoreFile(test_scores, PathIn(out_dir, "scores_" + name + ".score"));
  WriteDecisionFile(decisions, PathIn(out_dir, "decisions_" + name + ".dec"));
  WriteDetFile(det, PathIn(out_dir, "det_" + name + ".det"));

  SystemResult result;
  result.name = name;
  result.threshold = policy.threshold;
  result.cost = cost;
  result.eer = det.eer;
  return result;
}

}  // namespace

PipelineConfig::PipelineConfig() {
  synth.clusters = {{3, 2.0}, {3, 2.0}, {4, 2.0}};
}

void PipelineConfig::Set(const std::string& key, const std::string& value) {
  if (key == "format_version") {
    if (ParseIntValue(key, value) != 1)
      throw ParseError("pipeline config: unsupported format_version " + value);
  } else if (key == "synth.n_languages") {
    synth.n_languages = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "synth.clusters") {
    synth.clusters = ParseClusterList(value);
  } else if (key == "synth.dim") {
    synth.dim = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "synth.per_language_count") {
    synth.per_language_count = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "synth.dev_count") {
    synth.dev_count = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "synth.test_per_language") {
    synth.test_per_language = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "synth.oos_fraction") {
    synth.oos_fraction = ParseDoubleValue(key, value);
  } else if (key == "synth.oos_languages") {
    synth.oos_languages = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "synth.duration_min_s") {
    synth.duration_min_s = ParseDoubleValue(key, value);
  } else if (key == "synth.duration_max_s") {
    synth.duration_max_s = ParseDoubleValue(key, value);
  } else if (key == "synth.noise_a") {
    synth.noise_a = ParseDoubleValue(key, value);
  } else if (key == "synth.noise_b") {
    synth.noise_b = ParseDoubleValue(key, value);
  } else if (key == "synth.seed") {
    synth.seed = ParseSeedValue(key, value);
  } else if (key == "preprocess.eps") {
    preprocess_eps = ParseDoubleValue(key, value);
  } else if (key == "preprocess.lda_dim") {
    lda_dim = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "gmm.components") {
    gmm.num_components = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "gmm.relevance") {
    gmm.relevance = ParseDoubleValue(key, value);
  } else if (key == "gmm.max_iter") {
    gmm.em.max_iter = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "gmm.tol") {
    gmm.em.tol = ParseDoubleValue(key, value);
  } else if (key == "gmm.var_floor_scale") {
    gmm.em.var_floor_scale = ParseDoubleValue(key, value);
  } else if (key == "gmm.seed") {
    gmm.em.seed = ParseSeedValue(key, value);
  } else if (key == "dnn.hidden") {
    dnn_hidden = ParseIntList(key, value);
  } else if (key == "dnn.learning_rate") {
    dnn.learning_rate = ParseDoubleValue(key, value);
  } else if (key == "dnn.momentum") {
    dnn.momentum = ParseDoubleValue(key, value);
  } else if (key == "dnn.batch_size") {
    dnn.batch_size = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "dnn.epochs") {
    dnn.epochs = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "dnn.l2") {
    dnn.l2 = ParseDoubleValue(key, value);
  } else if (key == "dnn.patience") {
    dnn.patience = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "dnn.validation_fraction") {
    dnn.validation_fraction = ParseDoubleValue(key, value);
  } else if (key == "dnn.seed") {
    dnn.seed = ParseSeedValue(key, value);
  } else if (key == "density.c_max") {
    density.c_max = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "density.relevance") {
    density.relevance = ParseDoubleValue(key, value);
  } else if (key == "density.min_universal") {
    density.min_universal = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "density.min_language") {
    density.min_language = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "density.max_iter") {
    density.em.max_iter = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "density.tol") {
    density.em.tol = ParseDoubleValue(key, value);
  } else if (key == "density.var_floor_scale") {
    density.em.var_floor_scale = ParseDoubleValue(key, value);
  } else if (key == "density.seed") {
    density.em.seed = ParseSeedValue(key, value);
  } else if (key == "fusion.tol") {
    fusion.tol = ParseDoubleValue(key, value);
  } else if (key == "fusion.max_iter") {
    fusion.max_iter = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "decision.grid_points") {
    grid_points = static_cast<int>(ParseIntValue(key, value));
  } else if (key == "cost.p_oos") {
    cost.p_oos = ParseDoubleValue(key, value);
  } else if (key == "cost.scale") {
    cost.scale = ParseDoubleValue(key, value);
  } else {
    throw ParseError("pipeline config: unknown key '" + key + "'");
  }
}

void PipelineConfig::Validate() const {
  synth.Validate();
  if (!(preprocess_eps > 0.0))
    throw DomainError("pipeline: preprocess.eps must be positive");
  if (lda_dim < 1) throw DomainError("pipeline: preprocess.lda_dim must be >= 1");
  if (gmm.num_components < 1)
    throw DomainError("pipeline: gmm.components must be >= 1");
  if (!(gmm.relevance >= 0.0))
    throw DomainError("pipeline: gmm.relevance must be >= 0");
  if (gmm.em.max_iter < 1 || !(gmm.em.tol > 0.0))
    throw DomainError("pipeline: bad gmm EM settings");
  for (int h : dnn_hidden)
    if (h < 1) throw DomainError("pipeline: dnn.hidden widths must be >= 1");
  dnn.Validate();
  if (density.c_max < 1)
    throw DomainError("pipeline: density.c_max must be >= 1");
  if (!(density.relevance >= 0.0))
    throw DomainError("pipeline: density.relevance must be >= 0");
  if (density.min_universal < 1 || density.min_language < 1)
    throw DomainError("pipeline: density minimum pair counts must be >= 1");
  if (density.em.max_iter < 1 || !(density.em.tol > 0.0))
    throw DomainError("pipeline: bad density EM settings");
  if (!(fusion.tol > 0.0) || fusion.max_iter < 1)
    throw DomainError("pipeline: bad fusion settings");
  if (grid_points < 2)
    throw DomainError("pipeline: decision.grid_points must be >= 2");
  if (!(cost.p_oos >= 0.0 && cost.p_oos <= 1.0))
    throw DomainError("pipeline: cost.p_oos must lie in [0, 1]");
  if (!(cost.scale > 0.0))
    throw DomainError("pipeline: cost.scale must be positive");
}

PipelineConfig PipelineConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  PipelineConfig cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = Trimmed(line);
    if (text.empty() || text[0] == '#') continue;
    const size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected key=value");
    cfg.Set(Trimmed(text.substr(0, eq)), Trimmed(text.substr(eq + 1)));
  }
  return cfg;
}

void PipelineConfig::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "format_version=1\n";
  out << "synth.n_languages=" << synth.n_languages << '\n';
  out << "synth.clusters=" << FormatClusterList(synth.clusters) << '\n';
  out << "synth.dim=" << synth.dim << '\n';
  out << "synth.per_language_count=" << synth.per_language_count << '\n';
  out << "synth.dev_count=" << synth.dev_count << '\n';
  out << "synth.test_per_language=" << synth.test_per_language << '\n';
  out << "synth.oos_fraction=" << FormatFloat(synth.oos_fraction) << '\n';
  out << "synth.oos_languages=" << synth.oos_languages << '\n';
  out << "synth.duration_min_s=" << FormatFloat(synth.duration_min_s) << '\n';
  out << "synth.duration_max_s=" << FormatFloat(synth.duration_max_s) << '\n';
  out << "synth.noise_a=" << FormatFloat(synth.noise_a) << '\n';
  out << "synth.noise_b=" << FormatFloat(synth.noise_b) << '\n';
  out << "synth.seed=" << synth.seed << '\n';
  out << "preprocess.eps=" << FormatFloat(preprocess_eps) << '\n';
  out << "preprocess.lda_dim=" << lda_dim << '\n';
  out << "gmm.components=" << gmm.num_components << '\n';
  out << "gmm.relevance=" << FormatFloat(gmm.relevance) << '\n';
  out << "gmm.max_iter=" << gmm.em.max_iter << '\n';
  out << "gmm.tol=" << FormatFloat(gmm.em.tol) << '\n';
  out << "gmm.var_floor_scale=" << FormatFloat(gmm.em.var_floor_scale) << '\n';
  out << "gmm.seed=" << gmm.em.seed << '\n';
  out << "dnn.hidden=" << FormatIntList(dnn_hidden) << '\n';
  out << "dnn.learning_rate=" << FormatFloat(dnn.learning_rate) << '\n';
  out << "dnn.momentum=" << FormatFloat(dnn.momentum) << '\n';
  out << "dnn.batch_size=" << dnn.batch_size << '\n';
  out << "dnn.epochs=" << dnn.epochs << '\n';
  out << "dnn.l2=" << FormatFloat(dnn.l2) << '\n';
  out << "dnn.patience=" << dnn.patience << '\n';
  out << "dnn.validation_fraction=" << FormatFloat(dnn.validation_fraction)
      << '\n';
  out << "dnn.seed=" << dnn.seed << '\n';
  out << "density.c_max=" << density.c_max << '\n';
  out << "density.relevance=" << FormatFloat(density.relevance) << '\n';
  out << "density.min_universal=" << density.min_universal << '\n';
  out << "density.min_language=" << density.min_language << '\n';
  out << "density.max_iter=" << density.em.max_iter << '\n';
  out << "density.tol=" << FormatFloat(density.em.tol) << '\n';
  out << "density.var_floor_scale=" << FormatFloat(density.em.var_floor_scale)
      << '\n';
  out << "density.seed=" << density.em.seed << '\n';
  out << "fusion.tol=" << FormatFloat(fusion.tol) << '\n';
  out << "fusion.max_iter=" << fusion.max_iter << '\n';
  out << "decision.grid_points=" << grid_points << '\n';
  out << "cost.p_oos=" << FormatFloat(cost.p_oos) << '\n';
  out << "cost.scale=" << FormatFloat(cost.scale) << '\n';
  out.flush();
  if (!out) throw IoError("failed while writing " + path);
}

const SystemResult& PipelineResult::System(const std::string& name) const {
  for (const SystemResult& s : systems)
    if (s.name == name) return s;
  throw DomainError("pipeline: no system named " + name);
}

PipelineResult RunPipeline(const PipelineConfig& cfg,
                           const std::string& out_dir) {
  cfg.Validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  cfg.Save(PathIn(out_dir, "pipeline_config.cfg"));

  // Corpus.
  const SynthCorpora corpora = GenerateSyntheticCorpus(cfg.synth);
  WriteIVectorFile(corpora.dev, PathIn(out_dir, "dev.ivec"));
  WriteIVectorFile(corpora.train, PathIn(out_dir, "train.ivec"));
  WriteIVectorFile(corpora.test, PathIn(out_dir, "test.ivec"));

  // Conditioning: center/whiten on dev, unit norm, then LDA fit on train.
  const WhitenTransform whiten =
      FitCenterWhiten(corpora.dev, cfg.preprocess_eps);
  whiten.Save(PathIn(out_dir, "whiten.model"));
  const Corpus dev_white = ApplyCenterWhitenCorpus(whiten, corpora.dev, true);
  const Corpus train_white =
      ApplyCenterWhitenCorpus(whiten, corpora.train, true);
  const Corpus test_white = ApplyCenterWhitenCorpus(whiten, corpora.test, true);
  const LdaTransform lda = FitLda(train_white, cfg.lda_dim);
  lda.Save(PathIn(out_dir, "lda.model"));
  const Corpus dev_lda = ApplyLdaCorpus(lda, dev_white);
  const Corpus train_lda = ApplyLdaCorpus(lda, train_white);
  const Corpus test_lda = ApplyLdaCorpus(lda, test_white);

  std::vector<std::string> train_labels;
  train_labels.reserve(corpora.train.records.size());
  for (const IVectorRecord& rec : corpora.train.records)
    train_labels.push_back(rec.label);
  std::vector<std::string> test_labels;
  std::vector<Decision> truth;
  test_labels.reserve(corpora.test.records.size());
  truth.reserve(corpora.test.records.size());
  for (const IVectorRecord& rec : corpora.test.records) {
    test_labels.push_back(rec.label);
    truth.push_back(Decision{rec.id, rec.label});
  }

  // Baseline: cosine against per-language mean directions (no LDA).
  const CosineModel cosine = TrainCosine(train_white);
  cosine.Save(PathIn(out_dir, "cosine.model"));
  const TrialScoreMatrix baseline_test = ScoreCosineCorpus(cosine, test_white);
  const TrialScoreMatrix baseline_train =
      ScoreCosineCorpus(cosine, train_white);

  // Subsystem A: background GMM + per-language MAP models, LR scores.
  LanguageModelSet models = TrainLanguageModels(dev_lda, train_lda, cfg.gmm);
  models.preprocessing = "center_whiten,length_norm,lda";
  models.Save(PathIn(out_dir, "language_models.model"));
  const LooResult loo = LooScores(models, train_lda);
  WritePairFile(loo.pairs, PathIn(out_dir, "loo_gmm.pairs"));
  const TrialScoreMatrix gmm_test = ScoreGmm(models, test_lda);

  // Subsystem B: feedforward posterior network on the same vectors.
  std::vector<int> dims;
  dims.push_back(train_lda.dim);
  for (int h : cfg.dnn_hidden) dims.push_back(h);
  dims.push_back(static_cast<int>(train_lda.languages.size()));
  DnnModel dnn_init = InitDnn(dims, cfg.dnn.seed);
  dnn_init.languages = train_lda.languages;
  const DnnModel dnn = TrainDnn(dnn_init, train_lda, cfg.dnn);
  dnn.Save(PathIn(out_dir, "dnn.model"));
  const TrialScoreMatrix dnn_test = ScoreDnn(dnn, test_lda);
  const TrialScoreMatrix dnn_train = ScoreDnn(dnn, train_lda);
  const std::vector<ScoreDurationPair> dnn_pairs =
      MatrixToPairs(dnn_train, train_labels);
  WritePairFile(dnn_pairs, PathIn(out_dir, "train_dnn.pairs"));

  // Score-duration densities for both subsystems, universal + per-language.
  PipelineResult result;
  MmlReport report_gt, report_gn, report_dt, report_dn;
  ScoreDurationDensityModel density_gmm = FitUniversalDensities(
      loo.pairs, ScoreKind::kGmm, cfg.density, &report_gt, &report_gn);
  AdaptLanguageDensities(loo.pairs, cfg.density, &density_gmm);
  density_gmm.Save(PathIn(out_dir, "density_gmm.model"));
  ScoreDurationDensityModel density_dnn = FitUniversalDensities(
      dnn_pairs, ScoreKind::kDnn, cfg.density, &report_dt, &report_dn);
  AdaptLanguageDensities(dnn_pairs, cfg.density, &density_dnn);
  density_dnn.Save(PathIn(out_dir, "density_dnn.model"));
  result.gmm_target_components = report_gt.selected_c;
  result.gmm_nontarget_components = report_gn.selected_c;
  result.dnn_target_components = report_dt.selected_c;
  result.dnn_nontarget_components = report_dn.selected_c;

  const TrialScoreMatrix gmm_lr_test = TransformScores(density_gmm, gmm_test, true);
  const TrialScoreMatrix gmm_lr_train =
      TransformScores(density_gmm, loo.matrix, true);
  const TrialScoreMatrix dnn_lr_test = TransformScores(density_dnn, dnn_test, true);
  const TrialScoreMatrix dnn_lr_train =
      TransformScores(density_dnn, dnn_train, true);

  // Linear fusions (trained on the labeled training trials).
  const FusionModel fusion_ab =
      TrainFusion({loo.matrix, dnn_train}, train_labels, cfg.fusion);
  fusion_ab.Save(PathIn(out_dir, "fusion_ab.model"));
  const TrialScoreMatrix ab_test = ApplyFusion(fusion_ab, {gmm_test, dnn_test});
  const TrialScoreMatrix ab_train =
      ApplyFusion(fusion_ab, {loo.matrix, dnn_train});
  const FusionModel fusion_cd =
      TrainFusion({gmm_lr_train, dnn_lr_train}, train_labels, cfg.fusion);
  fusion_cd.Save(PathIn(out_dir, "fusion_cd.model"));
  const TrialScoreMatrix cd_test =
      ApplyFusion(fusion_cd, {gmm_lr_test, dnn_lr_test});
  const TrialScoreMatrix cd_train =
      ApplyFusion(fusion_cd, {gmm_lr_train, dnn_lr_train});

  result.systems.push_back(EvaluateSystem("baseline", baseline_test,
                                          baseline_train, train_labels, truth,
                                          test_labels, cfg, out_dir));
  result.systems.push_back(EvaluateSystem("gmm", gmm_test, loo.matrix,
                                          train_labels, truth, test_labels,
                                          cfg, out_dir));
  result.systems.push_back(EvaluateSystem("dnn", dnn_test, dnn_train,
                                          train_labels, truth, test_labels,
                                          cfg, out_dir));
  result.systems.push_back(EvaluateSystem("fused_ab", ab_test, ab_train,
                                          train_labels, truth, test_labels,
                                          cfg, out_dir));
  result.systems.push_back(EvaluateSystem("gmm_lr", gmm_lr_test, gmm_lr_train,
                                          train_labels, truth, test_labels,
                                          cfg, out_dir));
  result.systems.push_back(EvaluateSystem("dnn_lr", dnn_lr_test, dnn_lr_train,
                                          train_labels, truth, test_labels,
                                          cfg, out_dir));
  result.systems.push_back(EvaluateSystem("fused_cd", cd_test, cd_train,
                                          train_labels, truth, test_labels,
                                          cfg, out_dir));

  std::ofstream summary(PathIn(out_dir, "results.txt"));
  if (!summary) throw IoError("cannot write results.txt in " + out_dir);
  summary << "format_version=1\n";
  summary << "n_languages=" << corpora.language_names.size() << '\n';
  summary << "test_segments=" << corpora.test.records.size() << '\n';
  summary << "density_components_gmm_target=" << result.gmm_target_components
          << '\n';
  summary << "density_components_gmm_nontarget="
          << result.gmm_nontarget_components << '\n';
  summary << "density_components_dnn_target=" << result.dnn_target_components
          << '\n';
  summary << "density_components_dnn_nontarget="
          << result.dnn_nontarget_components << '\n';
  for (const SystemResult& s : result.systems) {
    summary << "cost_" << s.name << '=' << FormatFloat(s.cost) << '\n';
    summary << "eer_" << s.name << '=' << FormatFloat(s.eer) << '\n';
    summary << "eta_" << s.name << '=' << FormatFloat(s.threshold) << '\n';
  }
  summary.flush();
  if (!summary) throw IoError("failed while writing results.txt");
  return result;
}

}  // namespace lrfuse
