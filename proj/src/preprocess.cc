// src/preprocess.cc

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

#include "lrfuse/preprocess.h"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <map>

#include "lrfuse/io.h"
#include "lrfuse/parallel.h"

namespace lrfuse {

namespace {

// Population covariance (divide by n) of the rows; the whitening invariant
// checks against this same estimator.
Eigen::MatrixXd Covariance(const RowMatrix& data, const Vector& mean) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd centered =
      data.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(n);
}

// Flips each row so its first entry with magnitude above tol is positive.
void FixRowSigns(RowMatrix* rows) {
  for (Eigen::Index r = 0; r < rows->rows(); ++r) {
    const double tol = 1e-12 * rows->row(r).norm();
    for (Eigen::Index c = 0; c < rows->cols(); ++c) {
      const double v = (*rows)(r, c);
      if (std::abs(v) > tol) {
        if (v < 0) rows->row(r) = -rows->row(r);
        break;
      }
    }
  }
}

}  // namespace

WhitenTransform FitCenterWhiten(const Corpus& dev, double eps) {
  if (!(eps > 0.0)) throw DomainError("whiten: eps must be > 0");
  if (static_cast<Eigen::Index>(dev.size()) < dev.dim + 1)
    throw DomainError("whiten: need at least D + 1 = " +
                      std::to_string(dev.dim + 1) + " records, got " +
                      std::to_string(dev.size()));
  const RowMatrix data = dev.Data();
  WhitenTransform t;
  t.eps = eps;
  t.mean = data.colwise().mean().transpose();
  Eigen::MatrixXd cov = Covariance(data, t.mean);
  if (!cov.allFinite()) throw NumericError("whiten: covariance is not finite");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw NumericError("whiten: eigendecomposition failed");
  Vector inv_sqrt = eig.eigenvalues();
  for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(std::max(inv_sqrt[i], eps));
  t.whitener = eig.eigenvectors() * inv_sqrt.asDiagonal() *
               eig.eigenvectors().transpose();
  return t;
}

Vector ApplyCenterWhiten(const WhitenTransform& t, const Vector& v) {
  if (v.size() != t.mean.size())
    throw DimensionError("whiten: vector dimension " +
                         std::to_string(v.size()) + " != " +
                         std::to_string(t.mean.size()));
  return t.whitener * (v - t.mean);
}

Vector LengthNormalize(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw DomainError("length_normalize: zero vector");
  return v / norm;
}

LdaTransform FitLda(const Corpus& train, int k, double ridge_scale) {
  std::map<std::string, std::vector<Eigen::Index>> by_label;
  for (size_t i = 0; i < train.records.size(); ++i) {
    const IVectorRecord& rec = train.records[i];
    if (rec.labeled())
      by_label[rec.label].push_back(static_cast<Eigen::Index>(i));
  }
  const int num_classes = static_cast<int>(by_label.size());
  if (num_classes < 2) throw DomainError("lda: need at least 2 classes");
  for (const auto& [label, idx] : by_label)
    if (idx.size() < 2)
      throw DomainError("lda: class '" + label + "' has fewer than 2 records");
  if (k < 1) throw DomainError("lda: k must be >= 1, got " + std::to_string(k));
  // Between-class scatter has rank at most classes - 1, so extra requested
  // dimensions would only pick up ridge noise; clamp instead of failing.
  k = std::min(k, num_classes - 1);
  if (k > train.dim) throw DomainError("lda: k exceeds input dimension");

  const RowMatrix data = train.Data();
  const int dim = train.dim;
  Vector global_mean = Vector::Zero(dim);
  Eigen::Index labeled_count = 0;
  for (const auto& [label, idx] : by_label)
    for (Eigen::Index i : idx) {
      global_mean += data.row(i).transpose();
      ++labeled_count;
    }
  global_mean /= static_cast<double>(labeled_count);

  Eigen::MatrixXd s_within = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd s_between = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& [label, idx] : by_label) {
    Vector class_mean = Vector::Zero(dim);
    for (Eigen::Index i : idx) class_mean += data.row(i).transpose();
    class_mean /= static_cast<double>(idx.size());
    for (Eigen::Index i : idx) {
      Vector diff = data.row(i).transpose() - class_mean;
      s_within.selfadjointView<Eigen::Lower>().rankUpdate(diff);
    }
    Vector offset = class_mean - global_mean;
    s_between.selfadjointView<Eigen::Lower>().rankUpdate(
        offset, static_cast<double>(idx.size()));
  }
  s_within = s_within.selfadjointView<Eigen::Lower>();
  s_between = s_between.selfadjointView<Eigen::Lower>();
  // Covariance (mean) form. The generalized eigensolver normalizes the
  // eigenvectors to v' S_w v = 1, so with the mean scatter the projected
  // features come out with unit within-class variance per dimension.
  s_within /= static_cast<double>(labeled_count);
  s_between /= static_cast<double>(labeled_count);

  const double ridge = ridge_scale * s_within.trace() / dim;
  s_within.diagonal().array() += ridge;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(s_between,
                                                                s_within);
  if (eig.info() != Eigen::Success || !eig.eigenvectors().allFinite())
    throw NumericError(
        "lda: generalized eigendecomposition failed (within-class scatter "
        "singular?)");

  LdaTransform t;
  t.output_dim = k;
  t.projection.resize(k, dim);
  // Eigenvalues ascend; take the top k in descending order.
  for (int r = 0; r < k; ++r)
    t.projection.row(r) = eig.eigenvectors().col(dim - 1 - r).transpose();
  FixRowSigns(&t.projection);
  return t;
}

Vector ApplyLda(const LdaTransform& t, const Vector& v) {
  if (v.size() != t.projection.cols())
    throw DimensionError("lda: vector dimension " + std::to_string(v.size()) +
                         " != " + std::to_string(t.projection.cols()));
  return t.projection * v;
}

Corpus ApplyCenterWhitenCorpus(const WhitenTransform& t, const Corpus& in,
                               bool normalize) {
  if (in.dim != t.mean.size())
    throw DimensionError("whiten: corpus dimension mismatch");
  Corpus out = in;
  std::atomic<bool> zero_vector{false};
  ParallelFor(static_cast<std::ptrdiff_t>(out.records.size()), [&](auto i) {
    Vector v = t.whitener * (out.records[i].vec - t.mean);
    if (normalize) {
      const double norm = v.norm();
      if (!(norm > 0.0)) {
        zero_vector = true;
        return;
      }
      v /= norm;
    }
    out.records[i].vec = std::move(v);
  });
  if (zero_vector)
    throw DomainError("whiten: a whitened record has zero norm");
  return out;
}

Corpus ApplyLdaCorpus(const LdaTransform& t, const Corpus& in) {
  if (in.dim != t.projection.cols())
    throw DimensionError("lda: corpus dimension mismatch");
  Corpus out = in;
  ParallelFor(static_cast<std::ptrdiff_t>(out.records.size()), [&](auto i) {
    out.records[i].vec = t.projection * out.records[i].vec;
  });
  out.dim = t.output_dim;
  return out;
}

void WhitenTransform::Save(const std::string& path) const {
  ModelWriter w(path, "whiten");
  w.Scalar("eps", eps);
  w.Vec("mean", mean);
  w.Mat("whitener", whitener);
  w.Close();
}

WhitenTransform WhitenTransform::Load(const std::string& path) {
  ModelReader r(path, "whiten");
  WhitenTransform t;
  t.eps = r.GetDouble("eps");
  t.mean = r.GetVector("mean");
  t.whitener = r.GetMatrix("whitener");
  if (t.whitener.rows() != t.whitener.cols() ||
      t.whitener.rows() != t.mean.size())
    throw DimensionError(path + ": inconsistent whitener shape");
  return t;
}

void LdaTransform::Save(const std::string& path) const {
  ModelWriter w(path, "lda");
  w.Scalar("output_dim", output_dim);
  w.Mat("projection", projection);
  w.Close();
}

LdaTransform LdaTransform::Load(const std::string& path) {
  ModelReader r(path, "lda");
  LdaTransform t;
  t.output_dim = r.GetInt("output_dim");
  t.projection = r.GetMatrix("projection");
  if (t.projection.rows() != t.output_dim)
    throw DimensionError(path + ": inconsistent projection shape");
  return t;
}

}  // namespace lrfuse
