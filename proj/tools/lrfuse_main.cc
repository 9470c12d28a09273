// tools/lrfuse_main.cc

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
// Single binary exposing the pipeline as subcommands.  Every subcommand
// prints one machine-readable summary line of space-separated key=value
// pairs ending in status=ok.  Exit codes: 0 success, 1 module error
// (diagnostic on stderr), 2 usage error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lrfuse/cosine.h"
#include "lrfuse/dnn.h"
#include "lrfuse/duration_fusion.h"
#include "lrfuse/fusion_eval.h"
#include "lrfuse/gmm.h"
#include "lrfuse/io.h"
#include "lrfuse/language_models.h"
#include "lrfuse/pipeline.h"
#include "lrfuse/preprocess.h"
#include "lrfuse/synth.h"

namespace {

using namespace lrfuse;

// Accumulates the summary line; status=ok is appended at print time, so a
// throwing subcommand never emits a success line.
class Summary {
 public:
  explicit Summary(const std::string& command) { Add("command", command); }
  void Add(const std::string& key, const std::string& value) {
    line_ += (line_.empty() ? "" : " ") + key + '=' + value;
  }
  void Add(const std::string& key, double value) { Add(key, FormatFloat(value)); }
  void Add(const std::string& key, long long value) {
    Add(key, std::to_string(value));
  }
  void Print() const { std::cout << line_ << " status=ok\n"; }

 private:
  std::string line_;
};

// Re-projects every record onto the unit sphere.  Data files carry 9
// significant digits, so vectors that were unit norm when written come back
// off by ~1e-8; the projection is idempotent and restores the invariant the
// cosine scorer checks.
Corpus RenormalizedCorpus(Corpus corpus) {
  for (IVectorRecord& rec : corpus.records) rec.vec = LengthNormalize(rec.vec);
  return corpus;
}

// Truth files are decision-format (id<TAB>label); an i-vector file also
// works, using each record's label.
std::vector<Decision> LoadTruth(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw IoError("cannot read " + path);
  std::string first_line;
  std::getline(probe, first_line);
  probe.close();
  if (first_line.rfind("#ivec", 0) == 0) {
    const Corpus corpus = ParseIVectorFile(path);
    std::vector<Decision> truth;
    truth.reserve(corpus.records.size());
    for (const IVectorRecord& rec : corpus.records) {
      if (!rec.labeled())
        throw DomainError("truth corpus " + path + " has unlabeled record " +
                          rec.id);
      truth.push_back(Decision{rec.id, rec.label});
    }
    return truth;
  }
  return ParseDecisionFile(path);
}

std::vector<std::string> RowLabels(const std::vector<std::string>& ids,
                                   const std::vector<Decision>& truth) {
  std::map<std::string, std::string> by_id;
  for (const Decision& t : truth)
    if (!by_id.emplace(t.id, t.label).second)
      throw DomainError("duplicate truth id " + t.id);
  std::vector<std::string> labels;
  labels.reserve(ids.size());
  for (const std::string& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DomainError("no truth label for id " + id);
    labels.push_back(it->second);
  }
  return labels;
}

std::vector<int> ParseWidths(const std::string& text) {
  std::vector<int> widths;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    try {
      size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      widths.push_back(v);
    } catch (const std::exception&) {
      throw DomainError("bad layer width '" + item + "' in '" + text + "'");
    }
    pos = comma + 1;
  }
  return widths;
}

void WriteTruthFile(const Corpus& corpus, const std::string& path) {
  std::vector<Decision> truth;
  truth.reserve(corpus.records.size());
  for (const IVectorRecord& rec : corpus.records)
    truth.push_back(Decision{rec.id, rec.label});
  WriteDecisionFile(truth, path);
}

PipelineConfig LoadPipelineConfig(const std::string& config_path,
                                  const std::vector<std::string>& overrides) {
  PipelineConfig cfg =
      config_path.empty() ? PipelineConfig() : PipelineConfig::Load(config_path);
  for (const std::string& assignment : overrides) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
      throw DomainError("--set expects key=value, got '" + assignment + "'");
    cfg.Set(assignment.substr(0, eq), assignment.substr(eq + 1));
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Subcommand registrations.  Each Add* function wires flags into a shared
// options struct and installs a callback that runs the whole action.

void AddSynth(CLI::App& app) {
  struct Opts {
    std::string config;
    std::vector<std::string> sets;
    uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "synth", "Generate the synthetic dev/train/test corpora");
  cmd->add_option("--config", opts->config,
                  "Pipeline config file (synth.* keys are used)");
  cmd->add_option("--set", opts->sets, "Override a config key (key=value)");
  cmd->add_option("--seed", opts->seed, "Override synth.seed")
      ->each([opts](const std::string&) { opts->seed_given = true; });
  cmd->add_option("--out-dir", opts->out_dir,
                  "Directory for dev/train/test files")
      ->required();
  cmd->callback([opts] {
    PipelineConfig cfg = LoadPipelineConfig(opts->config, opts->sets);
    if (opts->seed_given) cfg.synth.seed = opts->seed;
    std::error_code ec;
    std::filesystem::create_directories(opts->out_dir, ec);
    if (ec) throw IoError("cannot create " + opts->out_dir + ": " + ec.message());
    const SynthCorpora corpora = GenerateSyntheticCorpus(cfg.synth);
    const auto path = [&](const char* name) {
      return (std::filesystem::path(opts->out_dir) / name).string();
    };
    WriteIVectorFile(corpora.dev, path("dev.ivec"));
    WriteIVectorFile(corpora.train, path("train.ivec"));
    WriteIVectorFile(corpora.test, path("test.ivec"));
    WriteTruthFile(corpora.train, path("train_truth.dec"));
    WriteTruthFile(corpora.test, path("test_truth.dec"));
    Summary s("synth");
    s.Add("dev", static_cast<long long>(corpora.dev.records.size()));
    s.Add("train", static_cast<long long>(corpora.train.records.size()));
    s.Add("test", static_cast<long long>(corpora.test.records.size()));
    s.Add("languages", static_cast<long long>(corpora.language_names.size()));
    s.Add("dim", static_cast<long long>(cfg.synth.dim));
    s.Add("seed", std::to_string(cfg.synth.seed));
    s.Print();
  });
}

void AddPreprocess(CLI::App& app) {
  struct Opts {
    std::string dev, load_whiten, save_whiten;
    std::string train, load_lda, save_lda;
    std::string input, output;
    double eps = 1e-8;
    double ridge = 1e-6;
    int lda_dim = 49;
    bool skip_lda = false;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "preprocess",
      "Fit/apply centering+whitening, length normalization and LDA");
  cmd->add_option("--dev", opts->dev, "Unlabeled corpus to fit the whitener on");
  cmd->add_option("--load-whiten", opts->load_whiten, "Existing whitener model");
  cmd->add_option("--save-whiten", opts->save_whiten, "Write the whitener here");
  cmd->add_option("--eps", opts->eps, "Whitening eigenvalue floor");
  cmd->add_option("--train", opts->train,
                  "Labeled corpus to fit LDA on (whitened internally)");
  cmd->add_option("--load-lda", opts->load_lda, "Existing LDA model");
  cmd->add_option("--save-lda", opts->save_lda, "Write the LDA model here");
  cmd->add_option("--lda-dim", opts->lda_dim, "Requested LDA dimension");
  cmd->add_option("--ridge", opts->ridge, "LDA within-class ridge scale");
  cmd->add_flag("--skip-lda", opts->skip_lda,
                "Stop after whitening + length normalization");
  cmd->add_option("--input", opts->input, "Corpus to transform");
  cmd->add_option("--output", opts->output, "Where to write the transform");
  cmd->callback([opts] {
    WhitenTransform whiten;
    bool whiten_fitted = false;
    if (!opts->load_whiten.empty()) {
      whiten = WhitenTransform::Load(opts->load_whiten);
    } else if (!opts->dev.empty()) {
      whiten = FitCenterWhiten(ParseIVectorFile(opts->dev), opts->eps);
      whiten_fitted = true;
    } else {
      throw DomainError("preprocess: need --dev or --load-whiten");
    }
    if (!opts->save_whiten.empty()) whiten.Save(opts->save_whiten);

    LdaTransform lda;
    bool have_lda = false;
    bool lda_fitted = false;
    if (!opts->skip_lda) {
      if (!opts->load_lda.empty()) {
        lda = LdaTransform::Load(opts->load_lda);
        have_lda = true;
      } else if (!opts->train.empty()) {
        const Corpus train_white = ApplyCenterWhitenCorpus(
            whiten, ParseIVectorFile(opts->train), true);
        lda = FitLda(train_white, opts->lda_dim, opts->ridge);
        have_lda = true;
        lda_fitted = true;
      }
      if (!opts->save_lda.empty()) {
        if (!have_lda)
          throw DomainError("preprocess: --save-lda needs --train or --load-lda");
        lda.Save(opts->save_lda);
      }
    }

    if (opts->input.empty() != opts->output.empty())
      throw DomainError("preprocess: --input and --output go together");
    long long records = 0;
    long long dim_in = 0;
    long long dim_out = static_cast<long long>(whiten.mean.size());
    if (!opts->input.empty()) {
      if (!opts->skip_lda && !have_lda)
        throw DomainError(
            "preprocess: need --train, --load-lda, or --skip-lda to transform");
      const Corpus in = ParseIVectorFile(opts->input);
      dim_in = in.dim;
      Corpus out = ApplyCenterWhitenCorpus(whiten, in, true);
      if (have_lda) out = ApplyLdaCorpus(lda, out);
      dim_out = out.dim;
      records = static_cast<long long>(out.records.size());
      WriteIVectorFile(out, opts->output);
    }
    Summary s("preprocess");
    s.Add("whiten_fitted", static_cast<long long>(whiten_fitted ? 1 : 0));
    s.Add("lda_fitted", static_cast<long long>(lda_fitted ? 1 : 0));
    s.Add("records", records);
    s.Add("dim_in", dim_in);
    s.Add("dim_out", dim_out);
    s.Print();
  });
}

void AddBaseline(CLI::App& app) {
  struct Opts {
    std::string train, model_in, model_out, test, scores_out;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "baseline", "Cosine baseline over whitened, length-normalized vectors");
  cmd->add_option("--train", opts->train, "Labeled training corpus");
  cmd->add_option("--model", opts->model_in, "Existing cosine model");
  cmd->add_option("--model-out", opts->model_out, "Write the model here");
  cmd->add_option("--test", opts->test, "Corpus to score");
  cmd->add_option("--scores-out", opts->scores_out, "Score file to write");
  cmd->callback([opts] {
    CosineModel model;
    if (!opts->model_in.empty()) {
      model = CosineModel::Load(opts->model_in);
    } else if (!opts->train.empty()) {
      model = TrainCosine(RenormalizedCorpus(ParseIVectorFile(opts->train)));
    } else {
      throw DomainError("baseline: need --train or --model");
    }
    if (!opts->model_out.empty()) model.Save(opts->model_out);
    long long scored = 0;
    if (!opts->test.empty()) {
      if (opts->scores_out.empty())
        throw DomainError("baseline: --test needs --scores-out");
      const TrialScoreMatrix scores = ScoreCosineCorpus(
          model, RenormalizedCorpus(ParseIVectorFile(opts->test)));
      WriteScoreFile(scores, opts->scores_out);
      scored = static_cast<long long>(scores.ids.size());
    }
    Summary s("baseline");
    s.Add("languages", static_cast<long long>(model.languages.size()));
    s.Add("scored", scored);
    s.Print();
  });
}

void AddGmm(CLI::App& app) {
  struct Opts {
    std::string dev, train, model_in, model_out, test, scores_out;
    GmmSubsystemConfig cfg;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "gmm", "Background GMM + MAP language models, likelihood-ratio scores");
  cmd->add_option("--dev", opts->dev, "Unlabeled corpus for the background model");
  cmd->add_option("--train", opts->train, "Labeled corpus for adaptation");
  cmd->add_option("--components", opts->cfg.num_components, "Mixture components");
  cmd->add_option("--relevance", opts->cfg.relevance, "MAP relevance factor");
  cmd->add_option("--max-iter", opts->cfg.em.max_iter, "EM iteration cap");
  cmd->add_option("--tol", opts->cfg.em.tol, "EM convergence tolerance");
  cmd->add_option("--var-floor-scale", opts->cfg.em.var_floor_scale,
                  "Variance floor as a fraction of global variance");
  cmd->add_option("--seed", opts->cfg.em.seed, "EM initialization seed");
  cmd->add_option("--model", opts->model_in, "Existing language-model set");
  cmd->add_option("--model-out", opts->model_out, "Write the model set here");
  cmd->add_option("--test", opts->test, "Corpus to score");
  cmd->add_option("--scores-out", opts->scores_out, "Score file to write");
  cmd->callback([opts] {
    LanguageModelSet models;
    if (!opts->model_in.empty()) {
      models = LanguageModelSet::Load(opts->model_in);
    } else if (!opts->dev.empty() && !opts->train.empty()) {
      models = TrainLanguageModels(ParseIVectorFile(opts->dev),
                                   ParseIVectorFile(opts->train), opts->cfg);
    } else {
      throw DomainError("gmm: need --model, or both --dev and --train");
    }
    if (!opts->model_out.empty()) models.Save(opts->model_out);
    long long scored = 0;
    if (!opts->test.empty()) {
      if (opts->scores_out.empty())
        throw DomainError("gmm: --test needs --scores-out");
      const TrialScoreMatrix scores =
          ScoreGmm(models, ParseIVectorFile(opts->test));
      WriteScoreFile(scores, opts->scores_out);
      scored = static_cast<long long>(scores.ids.size());
    }
    Summary s("gmm");
    s.Add("languages", static_cast<long long>(models.languages.size()));
    s.Add("components", static_cast<long long>(models.ubm.NumComponents()));
    s.Add("scored", scored);
    s.Print();
  });
}

void AddDnn(CLI::App& app) {
  struct Opts {
    std::string train, model_in, model_out, test, scores_out;
    std::string hidden = "600,600";
    DnnTrainConfig cfg;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "dnn", "Feedforward posterior network with log-odds scoring");
  cmd->add_option("--train", opts->train, "Labeled training corpus");
  cmd->add_option("--hidden", opts->hidden, "Hidden layer widths, e.g. 600,600");
  cmd->add_option("--learning-rate", opts->cfg.learning_rate, "SGD step size");
  cmd->add_option("--momentum", opts->cfg.momentum, "SGD momentum");
  cmd->add_option("--batch-size", opts->cfg.batch_size, "Mini-batch size");
  cmd->add_option("--epochs", opts->cfg.epochs, "Epoch cap");
  cmd->add_option("--l2", opts->cfg.l2, "Weight decay");
  cmd->add_option("--patience", opts->cfg.patience,
                  "Early-stop patience (validation epochs)");
  cmd->add_option("--val-fraction", opts->cfg.validation_fraction,
                  "Validation split fraction");
  cmd->add_option("--seed", opts->cfg.seed, "Init/shuffle seed");
  cmd->add_option("--model", opts->model_in, "Existing network model");
  cmd->add_option("--model-out", opts->model_out, "Write the model here");
  cmd->add_option("--test", opts->test, "Corpus to score");
  cmd->add_option("--scores-out", opts->scores_out, "Score file to write");
  cmd->callback([opts] {
    DnnModel model;
    DnnTrainReport report;
    bool trained = false;
    if (!opts->model_in.empty()) {
      model = DnnModel::Load(opts->model_in);
    } else if (!opts->train.empty()) {
      const Corpus train = ParseIVectorFile(opts->train);
      std::vector<int> dims;
      dims.push_back(train.dim);
      for (int h : ParseWidths(opts->hidden)) dims.push_back(h);
      dims.push_back(static_cast<int>(train.languages.size()));
      DnnModel init = InitDnn(dims, opts->cfg.seed);
      init.languages = train.languages;
      model = TrainDnn(init, train, opts->cfg, &report);
      trained = true;
    } else {
      throw DomainError("dnn: need --train or --model");
    }
    if (!opts->model_out.empty()) model.Save(opts->model_out);
    long long scored = 0;
    if (!opts->test.empty()) {
      if (opts->scores_out.empty())
        throw DomainError("dnn: --test needs --scores-out");
      const TrialScoreMatrix scores =
          ScoreDnn(model, ParseIVectorFile(opts->test));
      WriteScoreFile(scores, opts->scores_out);
      scored = static_cast<long long>(scores.ids.size());
    }
    Summary s("dnn");
    s.Add("languages", static_cast<long long>(model.languages.size()));
    if (trained) {
      s.Add("best_epoch", static_cast<long long>(report.best_epoch));
      const bool have_best = report.best_epoch >= 0 &&
                             static_cast<size_t>(report.best_epoch) <
                                 report.val_loss.size();
      s.Add("val_loss", have_best ? report.val_loss[report.best_epoch] : 0.0);
    }
    s.Add("scored", scored);
    s.Print();
  });
}

void AddLoo(CLI::App& app) {
  struct Opts {
    std::string model, train, pairs_out, scores_out;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "loo", "Leave-one-out trial scores over the training corpus");
  cmd->add_option("--model", opts->model, "Language-model set")->required();
  cmd->add_option("--train", opts->train, "Training corpus")->required();
  cmd->add_option("--pairs-out", opts->pairs_out,
                  "(score, log-duration) pair file to write")
      ->required();
  cmd->add_option("--scores-out", opts->scores_out,
                  "Optional score-matrix file");
  cmd->callback([opts] {
    const LanguageModelSet models = LanguageModelSet::Load(opts->model);
    const LooResult loo =
        LooScores(models, ParseIVectorFile(opts->train));
    WritePairFile(loo.pairs, opts->pairs_out);
    if (!opts->scores_out.empty())
      WriteScoreFile(loo.matrix, opts->scores_out);
    long long targets = 0;
    for (const ScoreDurationPair& p : loo.pairs) targets += p.target ? 1 : 0;
    Summary s("loo");
    s.Add("targets", targets);
    s.Add("nontargets", static_cast<long long>(loo.pairs.size()) - targets);
    s.Print();
  });
}

void AddFusion(CLI::App& app) {
  CLI::App* cmd = app.add_subcommand(
      "fusion", "Score-duration density models and LR transforms");
  cmd->require_subcommand(1);

  struct FitOpts {
    std::string pairs, source = "gmm", model_out;
    DensityFitConfig cfg;
    bool no_adapt = false;
  };
  auto fit = std::make_shared<FitOpts>();
  CLI::App* fit_cmd = cmd->add_subcommand(
      "fit-density", "Fit universal target/non-target densities and adapt");
  fit_cmd->add_option("--pairs", fit->pairs, "Pair file from loo")->required();
  fit_cmd->add_option("--source", fit->source,
                      "Subsystem the scores came from (gmm|dnn|cosine|fused)");
  fit_cmd->add_option("--c-max", fit->cfg.c_max, "Component-count ceiling");
  fit_cmd->add_option("--relevance", fit->cfg.relevance, "MAP relevance");
  fit_cmd->add_option("--min-universal", fit->cfg.min_universal,
                      "Minimum pairs per class for the universal fit");
  fit_cmd->add_option("--min-language", fit->cfg.min_language,
                      "Per-language minimum before falling back");
  fit_cmd->add_option("--max-iter", fit->cfg.em.max_iter, "EM iteration cap");
  fit_cmd->add_option("--tol", fit->cfg.em.tol, "EM convergence tolerance");
  fit_cmd->add_option("--seed", fit->cfg.em.seed, "EM initialization seed");
  fit_cmd->add_flag("--no-adapt", fit->no_adapt,
                    "Skip per-language adaptation");
  fit_cmd->add_option("--model-out", fit->model_out, "Density model to write")
      ->required();
  fit_cmd->callback([fit] {
    const std::vector<ScoreDurationPair> pairs = ParsePairFile(fit->pairs);
    MmlReport target_report, nontarget_report;
    ScoreDurationDensityModel model = FitUniversalDensities(
        pairs, ScoreKindFromName(fit->source), fit->cfg, &target_report,
        &nontarget_report);
    if (!fit->no_adapt) AdaptLanguageDensities(pairs, fit->cfg, &model);
    model.Save(fit->model_out);
    Summary s("fusion.fit-density");
    s.Add("target_components", static_cast<long long>(target_report.selected_c));
    s.Add("nontarget_components",
          static_cast<long long>(nontarget_report.selected_c));
    s.Add("languages", static_cast<long long>(model.languages.size()));
    s.Add("fallbacks", static_cast<long long>(model.fallback_languages.size()));
    s.Print();
  });

  struct TransformOpts {
    std::string model, scores, scores_out;
    bool universal = false;
  };
  auto tr = std::make_shared<TransformOpts>();
  CLI::App* tr_cmd = cmd->add_subcommand(
      "transform", "Replace raw scores with log likelihood ratios");
  tr_cmd->add_option("--model", tr->model, "Density model")->required();
  tr_cmd->add_option("--scores", tr->scores, "Raw score file")->required();
  tr_cmd->add_flag("--universal", tr->universal,
                   "Use the universal pair for every language");
  tr_cmd->add_option("--scores-out", tr->scores_out, "LR score file to write")
      ->required();
  tr_cmd->callback([tr] {
    const ScoreDurationDensityModel model =
        ScoreDurationDensityModel::Load(tr->model);
    const TrialScoreMatrix raw = ParseScoreFile(tr->scores);
    const TrialScoreMatrix out = TransformScores(model, raw, !tr->universal);
    WriteScoreFile(out, tr->scores_out);
    Summary s("fusion.transform");
    s.Add("rows", static_cast<long long>(out.ids.size()));
    s.Add("per_language", static_cast<long long>(tr->universal ? 0 : 1));
    s.Print();
  });
}

void AddFuse(CLI::App& app) {
  CLI::App* cmd =
      app.add_subcommand("fuse", "Linear subsystem fusion with a quality term");
  cmd->require_subcommand(1);

  struct TrainOpts {
    std::vector<std::string> scores;
    std::string truth, model_out;
    FusionTrainConfig cfg;
  };
  auto tr = std::make_shared<TrainOpts>();
  CLI::App* train_cmd =
      cmd->add_subcommand("train", "Fit fusion weights by logistic regression");
  train_cmd->add_option("--scores", tr->scores, "Subsystem score file (repeat)")
      ->required();
  train_cmd->add_option("--truth", tr->truth, "Truth labels (decision or i-vector file)")
      ->required();
  train_cmd->add_option("--tol", tr->cfg.tol, "Gradient tolerance");
  train_cmd->add_option("--max-iter", tr->cfg.max_iter, "Iteration cap");
  train_cmd->add_option("--model-out", tr->model_out, "Fusion model to write")
      ->required();
  train_cmd->callback([tr] {
    std::vector<TrialScoreMatrix> systems;
    for (const std::string& path : tr->scores)
      systems.push_back(ParseScoreFile(path));
    const std::vector<std::string> labels =
        RowLabels(systems.at(0).ids, LoadTruth(tr->truth));
    FusionTrainReport report;
    const FusionModel model = TrainFusion(systems, labels, tr->cfg, &report);
    model.Save(tr->model_out);
    Summary s("fuse.train");
    s.Add("subsystems", static_cast<long long>(systems.size()));
    s.Add("iterations", static_cast<long long>(report.iterations));
    s.Add("loss", report.final_loss);
    s.Add("converged", static_cast<long long>(report.converged ? 1 : 0));
    s.Print();
  });

  struct ApplyOpts {
    std::vector<std::string> scores;
    std::string model, scores_out;
  };
  auto ap = std::make_shared<ApplyOpts>();
  CLI::App* apply_cmd = cmd->add_subcommand("apply", "Apply fusion weights");
  apply_cmd->add_option("--model", ap->model, "Fusion model")->required();
  apply_cmd->add_option("--scores", ap->scores, "Subsystem score file (repeat)")
      ->required();
  apply_cmd->add_option("--scores-out", ap->scores_out, "Fused score file")
      ->required();
  apply_cmd->callback([ap] {
    std::vector<TrialScoreMatrix> systems;
    for (const std::string& path : ap->scores)
      systems.push_back(ParseScoreFile(path));
    const TrialScoreMatrix fused =
        ApplyFusion(FusionModel::Load(ap->model), systems);
    WriteScoreFile(fused, ap->scores_out);
    Summary s("fuse.apply");
    s.Add("rows", static_cast<long long>(fused.ids.size()));
    s.Print();
  });
}

void AddDecide(CLI::App& app) {
  struct Opts {
    std::string scores, decisions_out, tune_scores, tune_truth;
    std::string oos_label = kOutOfSetLabel;
    double threshold = 0.0;
    bool threshold_given = false;
    bool add_proxies = false;
    int grid_points = 512;
    CostParams cost;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "decide", "Argmax-with-threshold decisions, optionally tuning first");
  cmd->add_option("--scores", opts->scores, "Score file to decide")->required();
  cmd->add_option("--decisions-out", opts->decisions_out, "Decision file")
      ->required();
  cmd->add_option("--threshold", opts->threshold, "Fixed decision threshold")
      ->each([opts](const std::string&) { opts->threshold_given = true; });
  cmd->add_option("--tune-scores", opts->tune_scores,
                  "Score file to tune the threshold on");
  cmd->add_option("--tune-truth", opts->tune_truth,
                  "Truth labels for the tuning scores");
  cmd->add_flag("--add-oos-proxies", opts->add_proxies,
                "Append synthetic out-of-set rows before tuning");
  cmd->add_option("--grid-points", opts->grid_points, "Tuning grid size");
  cmd->add_option("--p-oos", opts->cost.p_oos, "Out-of-set prior");
  cmd->add_option("--scale", opts->cost.scale, "Cost reporting scale");
  cmd->add_option("--oos-label", opts->oos_label, "Out-of-set label");
  cmd->callback([opts] {
    DecisionPolicy policy;
    policy.out_label = opts->oos_label;
    if (opts->threshold_given) {
      policy.threshold = opts->threshold;
    } else if (!opts->tune_scores.empty() && !opts->tune_truth.empty()) {
      TrialScoreMatrix tune = ParseScoreFile(opts->tune_scores);
      std::vector<std::string> labels =
          RowLabels(tune.ids, LoadTruth(opts->tune_truth));
      if (opts->add_proxies) {
        std::vector<std::string> aug_labels;
        tune = WithOosProxies(tune, labels, &aug_labels);
        labels = std::move(aug_labels);
      }
      policy =
          TuneThreshold(tune, labels, opts->cost, opts->grid_points);
      policy.out_label = opts->oos_label;
    } else {
      throw DomainError(
          "decide: need --threshold or --tune-scores with --tune-truth");
    }
    const std::vector<Decision> decisions =
        Decide(ParseScoreFile(opts->scores), policy);
    WriteDecisionFile(decisions, opts->decisions_out);
    long long oos = 0;
    for (const Decision& d : decisions)
      oos += d.label == policy.out_label ? 1 : 0;
    Summary s("decide");
    s.Add("threshold", policy.threshold);
    s.Add("decided", static_cast<long long>(decisions.size()));
    s.Add("out_of_set", oos);
    s.Print();
  });
}

void AddEvaluate(CLI::App& app) {
  struct Opts {
    std::string decisions, truth, languages_csv;
    CostParams cost;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "evaluate", "Average per-class error cost of a decision file");
  cmd->add_option("--decisions", opts->decisions, "Decision file")->required();
  cmd->add_option("--truth", opts->truth, "Truth labels")->required();
  cmd->add_option("--languages", opts->languages_csv,
                  "Comma-separated class list (default: from truth)");
  cmd->add_option("--p-oos", opts->cost.p_oos, "Out-of-set prior");
  cmd->add_option("--scale", opts->cost.scale, "Cost reporting scale");
  cmd->callback([opts] {
    const std::vector<Decision> decisions =
        ParseDecisionFile(opts->decisions);
    const std::vector<Decision> truth = LoadTruth(opts->truth);
    std::vector<std::string> languages;
    if (!opts->languages_csv.empty()) {
      size_t pos = 0;
      while (pos <= opts->languages_csv.size()) {
        size_t comma = opts->languages_csv.find(',', pos);
        if (comma == std::string::npos) comma = opts->languages_csv.size();
        const std::string item = opts->languages_csv.substr(pos, comma - pos);
        if (item.empty())
          throw DomainError("evaluate: empty language in --languages");
        languages.push_back(item);
        pos = comma + 1;
      }
    } else {
      std::map<std::string, int> seen;
      for (const Decision& t : truth)
        if (t.label != kOutOfSetLabel) seen.emplace(t.label, 0);
      for (const auto& [label, unused] : seen) languages.push_back(label);
      if (languages.empty())
        throw DomainError("evaluate: no in-set classes in truth");
    }
    const double cost =
        ComputeCost(decisions, truth, languages, opts->cost);
    Summary s("evaluate");
    s.Add("classes", static_cast<long long>(languages.size()));
    s.Add("decisions", static_cast<long long>(decisions.size()));
    s.Add("cost", cost);
    s.Print();
  });
}

void AddDet(CLI::App& app) {
  struct Opts {
    std::string scores, truth, det_out;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "det", "Detection-error tradeoff points and equal error rate");
  cmd->add_option("--scores", opts->scores, "Score file")->required();
  cmd->add_option("--truth", opts->truth, "Truth labels")->required();
  cmd->add_option("--det-out", opts->det_out, "DET point file")->required();
  cmd->callback([opts] {
    const TrialScoreMatrix matrix = ParseScoreFile(opts->scores);
    const std::vector<std::string> labels =
        RowLabels(matrix.ids, LoadTruth(opts->truth));
    const DetCurve curve = ComputeDet(matrix, labels);
    WriteDetFile(curve, opts->det_out);
    Summary s("det");
    s.Add("points", static_cast<long long>(curve.points.size()));
    s.Add("eer", curve.eer);
    s.Print();
  });
}

void AddPipeline(CLI::App& app) {
  struct Opts {
    std::string config, out_dir;
    std::vector<std::string> sets;
  };
  auto opts = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand(
      "pipeline", "Full synthetic-corpus run: all subsystems, fusions, costs");
  cmd->add_option("--config", opts->config, "Pipeline config file");
  cmd->add_option("--set", opts->sets, "Override a config key (key=value)");
  cmd->add_option("--out-dir", opts->out_dir, "Artifact directory")->required();
  cmd->callback([opts] {
    const PipelineConfig cfg = LoadPipelineConfig(opts->config, opts->sets);
    const PipelineResult result = RunPipeline(cfg, opts->out_dir);
    Summary s("pipeline");
    for (const SystemResult& sys : result.systems) {
      s.Add("cost_" + sys.name, sys.cost);
      s.Add("eer_" + sys.name, sys.eer);
    }
    s.Add("density_components_gmm_target",
          static_cast<long long>(result.gmm_target_components));
    s.Add("density_components_gmm_nontarget",
          static_cast<long long>(result.gmm_nontarget_components));
    s.Add("density_components_dnn_target",
          static_cast<long long>(result.dnn_target_components));
    s.Add("density_components_dnn_nontarget",
          static_cast<long long>(result.dnn_nontarget_components));
    s.Print();
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-recognition pipeline over i-vectors"};
  app.require_subcommand(1);
  AddSynth(app);
  AddPreprocess(app);
  AddBaseline(app);
  AddGmm(app);
  AddDnn(app);
  AddLoo(app);
  AddFusion(app);
  AddFuse(app);
  AddDecide(app);
  AddEvaluate(app);
  AddDet(app);
  AddPipeline(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit 0, usage errors exit 2
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
