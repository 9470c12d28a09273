// include/lrfuse/gmm.h

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

#ifndef LRFUSE_GMM_H_
#define LRFUSE_GMM_H_

#include <cstdint>
#include <string>
#include <vector>

#include "lrfuse/common.h"

namespace lrfuse {

// Gaussian mixture machinery shared by the i-vector subsystem (diagonal
// covariance, typically 64 components over 49 dimensions) and the 2-D
// score-duration densities (full covariance, component count chosen by
// minimum-message-length model selection).

enum class CovarianceKind {
  kDiagonal,
  kFull,
};

std::string CovarianceKindName(CovarianceKind kind);
CovarianceKind CovarianceKindFromName(const std::string& name);

struct GmmModel {
  CovarianceKind covariance_kind = CovarianceKind::kDiagonal;
  Vector weights;     // C, positive, sums to 1
  RowMatrix means;    // C x D
  // Diagonal models store per-dimension variances; full models store one
  // symmetric positive-definite matrix per component.
  RowMatrix diag_vars;              // C x D (diagonal kind only)
  std::vector<RowMatrix> full_covs;  // C matrices, each D x D (full kind only)

  Eigen::Index NumComponents() const { return weights.size(); }
  Eigen::Index Dim() const { return means.cols(); }

  // Throws if weights do not sum to 1 (tolerance 1e-12), any weight is
  // non-positive, dimensions disagree, or a parameter is non-finite.
  void Validate() const;

  void Save(const std::string& path) const;
  static GmmModel Load(const std::string& path);
};

struct EmConfig {
  int max_iter = 200;
  // EM stops once the mean per-point log-likelihood improves by less than
  // this between consecutive iterations.
  double tol = 1e-7;
  // Variance floor, as a fraction of the global (whole-data) variance:
  // diagonal variances are floored per dimension, full-covariance
  // eigenvalues are floored at var_floor_scale * trace(global cov) / D.
  double var_floor_scale = 1e-4;
  uint64_t seed = 1;
  CovarianceKind covariance_kind = CovarianceKind::kDiagonal;
};

struct EmReport {
  std::vector<double> loglik_history;  // total log-likelihood per iteration
  int iterations = 0;
  int reseed_count = 0;
  bool converged = false;
};

// Precomputed evaluation cache for one immutable model: log-weights plus the
// per-component normalizer and inverse-covariance factors, so repeated
// density evaluations avoid refactorizing.
class GmmDensity {
 public:
  explicit GmmDensity(const GmmModel& model);

  Eigen::Index NumComponents() const { return log_weights_.size(); }
  Eigen::Index Dim() const { return means_.cols(); }
  bool IsDiagonal() const { return kind_ == CovarianceKind::kDiagonal; }

  // log(w_i) + log N(x; mu_i, Sigma_i) for every component.
  Vector ComponentLogDensities(const Vector& x) const;
  // log sum_i w_i N(x; mu_i, Sigma_i), via log-sum-exp.
  double LogLikelihood(const Vector& x) const;
  // Posterior responsibilities gamma_i(x); optionally also returns the
  // log-likelihood computed along the way.
  Vector Responsibilities(const Vector& x, double* loglik = nullptr) const;
  // One log-likelihood per row of data.  Parallel over rows; the result is
  // identical to calling LogLikelihood per row.
  Vector BatchLogLikelihood(const RowMatrix& data) const;
  // Bulk primitive: fills out (end-begin rows, C columns) with
  // log(w_i) + log N(x; mu_i, Sigma_i) for data rows [begin, end).
  void BlockComponentLogDensities(const RowMatrix& data, std::ptrdiff_t begin,
                                  std::ptrdiff_t end, RowMatrix* out) const;

 private:
  CovarianceKind kind_;
  Vector log_weights_;  // C
  RowMatrix means_;     // C x D
  // Diagonal: elementwise inverse variances.  log_norm_ holds
  // log(w_i) - 0.5 * (D log 2pi + sum_d log var_id).
  RowMatrix inv_vars_;  // C x D
  // Diagonal bulk-evaluation precomputes: the weighted squared distance
  // expands as x^2 . iv - 2 x . (iv*mu) + sum(mu^2 * iv), so blocks reduce to
  // two matrix products.
  RowMatrix diag_cross_;  // C x D: inv_vars * mu, elementwise
  Vector diag_const_;     // C: sum_d mu^2 * inv_var
  // Full: lower Cholesky factor L_i of Sigma_i; log_norm_ holds
  // log(w_i) - 0.5 * D log 2pi - sum_j log L_jj.
  std::vector<RowMatrix> chol_;  // C matrices, D x D lower-triangular
  Vector log_norm_;              // C
};

// Zeroth- and first-order sufficient statistics under fixed responsibilities,
// as used by MAP adaptation:  n_i = sum gamma_i(x),  sum_i = sum gamma_i(x) x.
// Supports exact removal of a single vector's contribution, which makes
// leave-one-out rescoring cheap (see subtraction identity in language_models).
struct MapStats {
  Vector n;       // C
  RowMatrix sum;  // C x D

  static MapStats Zero(Eigen::Index c, Eigen::Index d);
  void Add(const Vector& gamma, const Vector& x);
  void Subtract(const Vector& gamma, const Vector& x);
  void AddStats(const MapStats& other);
};

// Full EM sufficient statistics for one pass over data under a fixed model:
// total log-likelihood plus zeroth, first and second moments per component.
struct EmStats {
  double loglik = 0.0;
  Vector n;            // C
  RowMatrix first;     // C x D: sum gamma * x
  RowMatrix second;    // C x D: sum gamma * x^2 (diagonal kind)
  std::vector<RowMatrix> second_full;  // C of D x D: sum gamma * x x^T (full)
};

// One deterministic parallel pass accumulating EmStats.  with_second selects
// whether second moments are needed (MAP adaptation does not need them).
EmStats AccumulateEmStats(const GmmDensity& density, const RowMatrix& data,
                          bool with_second);

// Fits a c-component mixture by EM from a k-means++ initialization.
// The per-iteration total log-likelihood is recorded in report (if given) and
// is non-decreasing up to floor effects; a component whose weight collapses
// below 1e-10 is re-seeded once at the point the model currently likes least,
// and a second collapse of the same component raises NumericError.
GmmModel FitGmmEm(const RowMatrix& data, int c, const EmConfig& cfg,
                  EmReport* report = nullptr);

// Convenience wrapper: builds a density cache and evaluates one point.
double GmmLogLikelihood(const GmmModel& model, const Vector& x);

// Accumulates MAP statistics for data under the given (UBM) density.
MapStats AccumulateMapStats(const GmmDensity& ubm, const RowMatrix& data);

// Mean-only MAP adaptation from precomputed statistics:
//   alpha_i = n_i / (n_i + r),  mu'_i = alpha_i * (sum_i / n_i)
//                                       + (1 - alpha_i) * mu_i.
// Weights and covariances are copied from the UBM.  A component with zero
// occupancy keeps the UBM mean.  r < 0 raises DomainError.
GmmModel MapAdaptFromStats(const GmmModel& ubm, const MapStats& stats,
                           double r);

// MAP adaptation straight from data rows.
GmmModel MapAdapt(const GmmModel& ubm, const RowMatrix& data, double r);

struct MmlReport {
  int selected_c = 0;
  double message_length = 0.0;   // objective value of the returned model
  double loglik = 0.0;           // data log-likelihood of the returned model
  std::vector<int> candidate_cs;  // component counts whose converged models
                                  // were evaluated, in visit order
};

// Unsupervised component-count selection by component-wise EM with
// annihilation, starting from c_max components and annealing down to 1.
// A component's weight update is max(0, n_m - Np/2) (then renormalized),
// where Np counts the parameters of one component including its weight:
//   full covariance:  Np = D + D(D+1)/2 + 1
//   diagonal:         Np = 2D + 1.
// The returned model minimizes the message-length objective
//   (Np/2) * sum_{m alive} log(n w_m / 12) + (C/2) log(n/12) + C*Np/2
//     - log-likelihood,
// evaluated at each converged component count.
GmmModel FitGmmMml(const RowMatrix& data, int c_max, const EmConfig& cfg,
                   MmlReport* report = nullptr);

class ModelWriter;
class ModelReader;

// Writes/reads one mixture's fields under a key prefix, so container models
// (language-model sets, score-duration density sets) can bundle several
// mixtures in one file.
void WriteGmmBlocks(ModelWriter* writer, const std::string& prefix,
                    const GmmModel& model);
GmmModel ReadGmmBlocks(const ModelReader& reader, const std::string& prefix);

}  // namespace lrfuse

#endif  // LRFUSE_GMM_H_
