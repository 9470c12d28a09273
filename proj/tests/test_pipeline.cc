// tests/test_pipeline.cc

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
// Config plumbing and a shrunken end-to-end run: every artifact must appear,
// the seven systems must report sane numbers, and two runs from the same
// config must be byte-identical.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "lrfuse/common.h"
#include "lrfuse/pipeline.h"
#include "test_util.h"

using namespace lrfuse;
using testing::FilesIdentical;
using testing::ScratchDir;
using testing::Slurp;

namespace {

// A configuration small enough to run end to end in a couple of seconds.
PipelineConfig TinyConfig() {
  PipelineConfig cfg;
  cfg.Set("synth.n_languages", "4");
  cfg.Set("synth.clusters", "2:0.5,2:0.5");
  cfg.Set("synth.dim", "8");
  cfg.Set("synth.per_language_count", "30");
  cfg.Set("synth.dev_count", "200");
  cfg.Set("synth.test_per_language", "20");
  cfg.Set("synth.oos_languages", "2");
  cfg.Set("synth.seed", "3");
  cfg.Set("preprocess.lda_dim", "3");
  cfg.Set("gmm.components", "2");
  cfg.Set("dnn.hidden", "8");
  cfg.Set("dnn.epochs", "5");
  cfg.Set("density.c_max", "2");
  cfg.Set("decision.grid_points", "64");
  cfg.Validate();
  return cfg;
}

const std::vector<std::string> kSystemNames = {
    "baseline", "gmm", "dnn", "fused_ab", "gmm_lr", "dnn_lr", "fused_cd"};

const std::vector<std::string> kArtifacts = {
    "pipeline_config.cfg", "dev.ivec",          "train.ivec",
    "test.ivec",           "whiten.model",      "lda.model",
    "cosine.model",        "language_models.model", "loo_gmm.pairs",
    "dnn.model",           "train_dnn.pairs",   "density_gmm.model",
    "density_dnn.model",   "fusion_ab.model",   "fusion_cd.model",
    "results.txt"};

}  // namespace

TEST_CASE("the default configuration is valid and self-consistent") {
  PipelineConfig cfg;
  cfg.Validate();
  CHECK(cfg.synth.n_languages == 10);
  REQUIRE(cfg.synth.clusters.size() == 3);
  int total = 0;
  for (const ClusterSpec& cluster : cfg.synth.clusters)
    total += cluster.num_languages;
  CHECK(total == cfg.synth.n_languages);
}

TEST_CASE("config files survive a save/load round trip byte for byte") {
  ScratchDir dir("pipeline_cfg");
  PipelineConfig cfg = TinyConfig();
  const std::string first = dir.Path("a.cfg");
  const std::string second = dir.Path("b.cfg");
  cfg.Save(first);
  const PipelineConfig loaded = PipelineConfig::Load(first);
  loaded.Save(second);
  CHECK(FilesIdentical(first, second));
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
  PipelineConfig cfg;
  CHECK_THROWS_AS(cfg.Set("synth.does_not_exist", "1"), ParseError);
  CHECK_THROWS_AS(cfg.Set("synth.dim", "forty"), ParseError);
  CHECK_THROWS_AS(cfg.Set("synth.clusters", "3:bad"), ParseError);
  CHECK_THROWS_AS(cfg.Set("", "1"), ParseError);

  // Structurally invalid settings surface at validation time.
  PipelineConfig bad;
  bad.Set("synth.n_languages", "7");  // clusters still sum to 10
  CHECK_THROWS_AS(bad.Validate(), DomainError);
}

TEST_CASE("the shrunken pipeline produces every artifact and sane results") {
  ScratchDir dir("pipeline_run");
  const PipelineConfig cfg = TinyConfig();
  const std::string out = dir.Path("run");
  const PipelineResult result = RunPipeline(cfg, out);

  REQUIRE(result.systems.size() == 7);
  for (size_t k = 0; k < kSystemNames.size(); ++k) {
    CHECK(result.systems[k].name == kSystemNames[k]);
    CHECK(std::isfinite(result.systems[k].threshold));
    CHECK(result.systems[k].cost >= 0.0);
    CHECK(result.systems[k].cost <= cfg.cost.scale);
    CHECK(result.systems[k].eer >= 0.0);
    CHECK(result.systems[k].eer <= 1.0);
  }
  CHECK(result.System("gmm").name == "gmm");
  CHECK_THROWS_AS(result.System("nope"), DomainError);
  CHECK(result.gmm_target_components >= 1);
  CHECK(result.gmm_nontarget_components >= 1);
  CHECK(result.dnn_target_components >= 1);
  CHECK(result.dnn_nontarget_components >= 1);

  for (const std::string& name : kArtifacts) {
    INFO("artifact: " << name);
    CHECK(std::filesystem::exists(out + "/" + name));
  }
  for (const std::string& system : kSystemNames) {
    INFO("system: " << system);
    CHECK(std::filesystem::exists(out + "/scores_" + system + ".score"));
    CHECK(std::filesystem::exists(out + "/decisions_" + system + ".dec"));
    CHECK(std::filesystem::exists(out + "/det_" + system + ".det"));
  }

  // results.txt lists one cost and one EER per system.
  const std::string results = Slurp(out + "/results.txt");
  for (const std::string& system : kSystemNames) {
    INFO("system: " << system);
    CHECK(results.find("cost_" + system + "=") != std::string::npos);
    CHECK(results.find("eer_" + system + "=") != std::string::npos);
  }
}

TEST_CASE("two runs from one config are byte-identical") {
  ScratchDir dir("pipeline_repro");
  const PipelineConfig cfg = TinyConfig();
  const std::string first = dir.Path("first");
  const std::string second = dir.Path("second");
  RunPipeline(cfg, first);
  RunPipeline(cfg, second);

  size_t compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(first)) {
    const std::string name = entry.path().filename().string();
    INFO("artifact: " << name);
    REQUIRE(std::filesystem::exists(second + "/" + name));
    CHECK(FilesIdentical(entry.path().string(), second + "/" + name));
    ++compared;
  }
  // Everything the first run produced was compared against the second.
  CHECK(compared >= kArtifacts.size() + 3 * kSystemNames.size());
}
