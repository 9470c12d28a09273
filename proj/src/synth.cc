// src/synth.cc

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

#include "lrfuse/synth.h"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "lrfuse/rng.h"

namespace lrfuse {

namespace {

// Cluster centers sit at kCenterRadiusFactor * max_spread from the origin
// along near-orthogonal directions, so inter-cluster mean distances dominate
// the intra-cluster spread.
constexpr double kCenterRadiusFactor = 8.0;

Vector RandomDirection(int dim, Rng* rng) {
  Vector v(dim);
  for (int d = 0; d < dim; ++d) v[d] = rng->Normal();
  double norm = v.norm();
  while (norm < 1e-12) {  // astronomically unlikely; redraw keeps it total
    for (int d = 0; d < dim; ++d) v[d] = rng->Normal();
    norm = v.norm();
  }
  return v / norm;
}

// Random directions, orthogonalized against the previous ones while the
// dimension allows it.
RowMatrix PlaceCenters(int count, int dim, double radius, Rng* rng) {
  RowMatrix centers(count, dim);
  for (int c = 0; c < count; ++c) {
    Vector dir = RandomDirection(dim, rng);
    for (int prev = 0; prev < c && prev < dim - 1; ++prev) {
      Vector p = centers.row(prev).transpose() / radius;
      dir -= dir.dot(p) * p;
    }
    double norm = dir.norm();
    if (norm > 1e-9) dir /= norm;
    centers.row(c) = (radius * dir).transpose();
  }
  return centers;
}

std::string LanguageName(int index, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "lang%0*d", width, index + 1);
  return buf;
}

std::string RecordId(const char* prefix, size_t index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_%06zu", prefix, index + 1);
  return buf;
}

}  // namespace

void SynthSpec::Validate() const {
  if (n_languages < 2) throw DomainError("synth: need at least 2 languages");
  if (clusters.empty()) throw DomainError("synth: cluster list is empty");
  int total = 0;
  for (const ClusterSpec& c : clusters) {
    if (c.num_languages < 1)
      throw DomainError("synth: cluster with no languages");
    if (!(c.spread > 0.0)) throw DomainError("synth: cluster spread must be > 0");
    total += c.num_languages;
  }
  if (total != n_languages)
    throw DomainError("synth: cluster language counts sum to " +
                      std::to_string(total) + ", expected " +
                      std::to_string(n_languages));
  if (dim < 1) throw DomainError("synth: dim must be >= 1");
  if (per_language_count < 2)
    throw DomainError("synth: per_language_count must be >= 2");
  if (dev_count < 0) throw DomainError("synth: dev_count must be >= 0");
  if (test_per_language < 1)
    throw DomainError("synth: test_per_language must be >= 1");
  if (!(oos_fraction >= 0.0 && oos_fraction < 1.0))
    throw DomainError("synth: oos_fraction must be in [0, 1)");
  if (oos_fraction > 0.0 && oos_languages < 1)
    throw DomainError("synth: oos_fraction > 0 needs oos_languages >= 1");
  if (!(duration_min_s > 0.0) || !(duration_min_s < duration_max_s))
    throw DomainError("synth: need 0 < duration_min_s < duration_max_s");
  if (noise_a < 0.0 || noise_b < 0.0)
    throw DomainError("synth: noise coefficients must be >= 0");
  if (!(noise_a + noise_b > 0.0))
    throw DomainError("synth: noise law is identically zero");
}

SynthCorpora GenerateSyntheticCorpus(const SynthSpec& spec) {
  spec.Validate();
  Rng rng(spec.seed);

  double max_spread = 0.0;
  for (const ClusterSpec& c : spec.clusters)
    max_spread = std::max(max_spread, c.spread);
  const int num_clusters = static_cast<int>(spec.clusters.size());
  const RowMatrix centers = PlaceCenters(
      num_clusters, spec.dim, kCenterRadiusFactor * max_spread, &rng);

  SynthCorpora out;

  // In-set language means, cluster by cluster.
  const int name_width =
      std::max(2, static_cast<int>(std::to_string(spec.n_languages).size()));
  out.language_means.resize(spec.n_languages, spec.dim);
  std::vector<int> language_cluster(spec.n_languages);
  {
    int l = 0;
    for (int c = 0; c < num_clusters; ++c) {
      for (int k = 0; k < spec.clusters[c].num_languages; ++k, ++l) {
        out.language_names.push_back(LanguageName(l, name_width));
        language_cluster[l] = c;
        out.language_means.row(l) =
            centers.row(c) +
            (spec.clusters[c].spread * RandomDirection(spec.dim, &rng))
                .transpose();
      }
    }
  }

  // Held-out out-of-set means, assigned to clusters round-robin.
  const int num_oos = spec.oos_fraction > 0.0 ? spec.oos_languages : 0;
  out.oos_means.resize(num_oos, spec.dim);
  for (int o = 0; o < num_oos; ++o) {
    const int c = o % num_clusters;
    out.oos_means.row(o) =
        centers.row(c) +
        (spec.clusters[c].spread * RandomDirection(spec.dim, &rng)).transpose();
  }

  const double log_dur_min = std::log(spec.duration_min_s);
  const double log_dur_max = std::log(spec.duration_max_s);
  auto draw_record = [&](const Eigen::Ref<const Eigen::RowVectorXd>& mean) {
    IVectorRecord rec;
    rec.duration_s = std::exp(rng.Uniform(log_dur_min, log_dur_max));
    const double sigma =
        std::sqrt(spec.noise_a + spec.noise_b / rec.duration_s);
    rec.vec.resize(spec.dim);
    for (int d = 0; d < spec.dim; ++d)
      rec.vec[d] = mean[d] + sigma * rng.Normal();
    return rec;
  };

  // Dev: unlabeled, languages cycled round-robin.
  for (int i = 0; i < spec.dev_count; ++i) {
    IVectorRecord rec = draw_record(out.language_means.row(i % spec.n_languages));
    rec.id = RecordId("dev", out.dev.records.size());
    out.dev.records.push_back(std::move(rec));
  }

  // Train: labeled, per_language_count per language.
  for (int l = 0; l < spec.n_languages; ++l) {
    for (int k = 0; k < spec.per_language_count; ++k) {
      IVectorRecord rec = draw_record(out.language_means.row(l));
      rec.id = RecordId("train", out.train.records.size());
      rec.label = out.language_names[l];
      out.train.records.push_back(std::move(rec));
    }
  }

  // Test: labeled in-set records plus out-of-set records from held-out means,
  // shuffled together; ids assigned after the shuffle.
  std::vector<IVectorRecord> test_records;
  for (int l = 0; l < spec.n_languages; ++l) {
    for (int k = 0; k < spec.test_per_language; ++k) {
      IVectorRecord rec = draw_record(out.language_means.row(l));
      rec.label = out.language_names[l];
      test_records.push_back(std::move(rec));
    }
  }
  const size_t inset_count = test_records.size();
  if (num_oos > 0) {
    const size_t oos_count = static_cast<size_t>(std::llround(
        spec.oos_fraction / (1.0 - spec.oos_fraction) * inset_count));
    for (size_t k = 0; k < oos_count; ++k) {
      IVectorRecord rec =
          draw_record(out.oos_means.row(static_cast<int>(k) % num_oos));
      rec.label = kOutOfSetLabel;
      test_records.push_back(std::move(rec));
    }
  }
  rng.Shuffle(&test_records);
  for (size_t i = 0; i < test_records.size(); ++i)
    test_records[i].id = RecordId("test", i);
  out.test.records = std::move(test_records);

  out.dev.Finalize();
  out.train.Finalize();
  out.test.Finalize();
  return out;
}

}  // namespace lrfuse
