// src/serial_ref.cc

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

#include "lrfuse/serial_ref.h"

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "lrfuse/dnn.h"

namespace lrfuse {

namespace {

constexpr double kRefLog2Pi = 1.8378770664093454835606594728112353;

// Per-component log densities of one point, written as plainly as possible.
std::vector<double> PointComponentLogDensities(const GmmModel& model,
                                               const Vector& x) {
  const Eigen::Index c = model.NumComponents();
  const Eigen::Index d = model.Dim();
  std::vector<double> logp(static_cast<size_t>(c));
  for (Eigen::Index i = 0; i < c; ++i) {
    double quad = 0.0;
    double log_det = 0.0;
    if (model.covariance_kind == CovarianceKind::kDiagonal) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = x[j] - model.means(i, j);
        quad += diff * diff / model.diag_vars(i, j);
        log_det += std::log(model.diag_vars(i, j));
      }
    } else {
      Eigen::LLT<RowMatrix> llt(model.full_covs[static_cast<size_t>(i)]);
      Vector diff = x - model.means.row(i).transpose();
      Vector z = RowMatrix(llt.matrixL())
                     .triangularView<Eigen::Lower>()
                     .solve(diff);
      quad = z.squaredNorm();
      log_det = 2.0 * RowMatrix(llt.matrixL()).diagonal().array().log().sum();
    }
    logp[static_cast<size_t>(i)] =
        std::log(model.weights[i]) -
        0.5 * (static_cast<double>(d) * kRefLog2Pi + log_det + quad);
  }
  return logp;
}

double PointLogSumExp(const std::vector<double>& v) {
  double mx = v[0];
  for (double x : v)
    if (x > mx) mx = x;
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

Vector SerialGmmLogLikelihoods(const GmmModel& model, const RowMatrix& data) {
  Vector out(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    out[i] = PointLogSumExp(
        PointComponentLogDensities(model, data.row(i).transpose()));
  return out;
}

EmStats SerialEmStats(const GmmModel& model, const RowMatrix& data) {
  const Eigen::Index c = model.NumComponents();
  const Eigen::Index d = model.Dim();
  EmStats stats;
  stats.loglik = 0.0;
  stats.n = Vector::Zero(c);
  stats.first = RowMatrix::Zero(c, d);
  if (model.covariance_kind == CovarianceKind::kDiagonal)
    stats.second = RowMatrix::Zero(c, d);
  else
    stats.second_full.assign(static_cast<size_t>(c), RowMatrix::Zero(d, d));

  for (Eigen::Index row = 0; row < data.rows(); ++row) {
    const Vector x = data.row(row).transpose();
    const std::vector<double> logp = PointComponentLogDensities(model, x);
    const double lse = PointLogSumExp(logp);
    stats.loglik += lse;
    for (Eigen::Index i = 0; i < c; ++i) {
      const double gamma = std::exp(logp[static_cast<size_t>(i)] - lse);
      stats.n[i] += gamma;
      for (Eigen::Index j = 0; j < d; ++j) {
        stats.first(i, j) += gamma * x[j];
        if (model.covariance_kind == CovarianceKind::kDiagonal) {
          stats.second(i, j) += gamma * x[j] * x[j];
        } else {
          for (Eigen::Index k = 0; k < d; ++k)
            stats.second_full[static_cast<size_t>(i)](j, k) +=
                gamma * x[j] * x[k];
        }
      }
    }
  }
  return stats;
}

RowMatrix SerialDnnPosteriors(const DnnModel& model, const RowMatrix& data) {
  const int layers = model.NumAffineLayers();
  RowMatrix out(data.rows(), model.OutputDim());
  for (Eigen::Index row = 0; row < data.rows(); ++row) {
    std::vector<double> a(static_cast<size_t>(data.cols()));
    for (Eigen::Index j = 0; j < data.cols(); ++j)
      a[static_cast<size_t>(j)] = data(row, j);
    for (int l = 0; l < layers; ++l) {
      const RowMatrix& w = model.weights[static_cast<size_t>(l)];
      const Vector& b = model.biases[static_cast<size_t>(l)];
      std::vector<double> z(static_cast<size_t>(w.rows()));
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double s = b[i];
        for (Eigen::Index j = 0; j < w.cols(); ++j)
          s += w(i, j) * a[static_cast<size_t>(j)];
        z[static_cast<size_t>(i)] = s;
      }
      if (l + 1 < layers) {
        for (double& v : z) v = 1.0 / (1.0 + std::exp(-v));
      } else {
        const double lse = PointLogSumExp(z);
        for (double& v : z) v = std::exp(v - lse);
      }
      a = std::move(z);
    }
    for (Eigen::Index l = 0; l < out.cols(); ++l)
      out(row, l) = a[static_cast<size_t>(l)];
  }
  return out;
}

}  // namespace lrfuse
