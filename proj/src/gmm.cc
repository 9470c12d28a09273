// src/gmm.cc

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

#include "lrfuse/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lrfuse/io.h"
#include "lrfuse/parallel.h"
#include "lrfuse/rng.h"

namespace lrfuse {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112353;

constexpr double kCollapseWeight = 1e-10;
constexpr double kMinVariance = 1e-12;
// Relative message-length change below which one annihilation level of the
// component-selection EM is considered converged.
constexpr double kMmlRelTol = 1e-6;

double LogSumExp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Per-dimension population variance of the rows of data.
Vector GlobalVariance(const RowMatrix& data, const Vector& mean) {
  const double n = static_cast<double>(data.rows());
  return ((data.rowwise() - mean.transpose()).array().square().colwise().sum() /
          n)
      .matrix()
      .transpose();
}

// Population covariance of the rows of data.
RowMatrix GlobalCovariance(const RowMatrix& data, const Vector& mean) {
  RowMatrix centered = data.rowwise() - mean.transpose();
  RowMatrix cov = centered.transpose() * centered;
  cov /= static_cast<double>(data.rows());
  return cov;
}

// Clamps the eigenvalues of a symmetric matrix at floor, preserving
// eigenvectors; keeps every fitted covariance safely positive definite.
RowMatrix FloorEigenvalues(const RowMatrix& cov, double floor) {
  RowMatrix sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<RowMatrix> eig(sym);
  if (eig.info() != Eigen::Success)
    throw NumericError("gmm: covariance eigendecomposition failed");
  Vector vals = eig.eigenvalues().cwiseMax(floor);
  RowMatrix out =
      eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// k-means++ seeding: the first center uniform, each further center drawn with
// probability proportional to squared distance from the nearest chosen one.
RowMatrix KMeansPlusPlusMeans(const RowMatrix& data, int c, Rng* rng) {
  const Eigen::Index n = data.rows();
  RowMatrix centers(c, data.cols());
  centers.row(0) = data.row(static_cast<Eigen::Index>(
      rng->Below(static_cast<uint64_t>(n))));
  if (c == 1) return centers;
  Vector d2 =
      (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < c; ++k) {
    const double total = d2.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      const double u = rng->Uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > u) {
          pick = i;
          break;
        }
      }
    } else {
      // Every point coincides with a chosen center; any index works.
      pick = static_cast<Eigen::Index>(rng->Below(static_cast<uint64_t>(n)));
    }
    centers.row(k) = data.row(pick);
    d2 = d2.cwiseMin(
        (data.rowwise() - centers.row(k)).rowwise().squaredNorm().eval());
  }
  return centers;
}

void CheckTrainingData(const RowMatrix& data, const char* where) {
  if (!data.allFinite())
    throw NumericError(std::string(where) + ": non-finite training data");
  bool all_identical = true;
  for (Eigen::Index i = 1; i < data.rows() && all_identical; ++i)
    if (data.row(i) != data.row(0)) all_identical = false;
  if (all_identical && data.rows() > 1)
    throw NumericError(std::string(where) +
                       ": degenerate data (all points identical)");
}

// Parameters of one mixture component, weight included: the model-selection
// penalty charges this many scalars per alive component.
double ParamsPerComponent(CovarianceKind kind, Eigen::Index d) {
  const double dd = static_cast<double>(d);
  if (kind == CovarianceKind::kDiagonal) return 2.0 * dd + 1.0;
  return dd + dd * (dd + 1.0) / 2.0 + 1.0;
}

}  // namespace

std::string CovarianceKindName(CovarianceKind kind) {
  return kind == CovarianceKind::kDiagonal ? "diagonal" : "full";
}

CovarianceKind CovarianceKindFromName(const std::string& name) {
  if (name == "diagonal") return CovarianceKind::kDiagonal;
  if (name == "full") return CovarianceKind::kFull;
  throw ParseError("unknown covariance kind '" + name + "'");
}

void GmmModel::Validate() const {
  const Eigen::Index c = weights.size();
  const Eigen::Index d = means.cols();
  if (c < 1) throw DomainError("gmm: empty model");
  if (means.rows() != c)
    throw DimensionError("gmm: mean rows do not match component count");
  if (!weights.allFinite() || !means.allFinite())
    throw NumericError("gmm: non-finite parameters");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw DomainError("gmm: weights do not sum to 1");
  if ((weights.array() <= 0.0).any())
    throw DomainError("gmm: non-positive component weight");
  if (covariance_kind == CovarianceKind::kDiagonal) {
    if (diag_vars.rows() != c || diag_vars.cols() != d)
      throw DimensionError("gmm: variance shape mismatch");
    if (!diag_vars.allFinite() || (diag_vars.array() <= 0.0).any())
      throw NumericError("gmm: invalid diagonal variance");
  } else {
    if (static_cast<Eigen::Index>(full_covs.size()) != c)
      throw DimensionError("gmm: covariance count mismatch");
    for (const RowMatrix& cov : full_covs) {
      if (cov.rows() != d || cov.cols() != d)
        throw DimensionError("gmm: covariance shape mismatch");
      if (!cov.allFinite()) throw NumericError("gmm: non-finite covariance");
      const double scale = 1.0 + cov.cwiseAbs().maxCoeff();
      if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw NumericError("gmm: covariance not symmetric");
    }
  }
}

void GmmModel::Save(const std::string& path) const {
  Validate();
  ModelWriter writer(path, "gmm");
  writer.Scalar("covariance_kind", CovarianceKindName(covariance_kind));
  writer.Scalar("num_components", static_cast<int>(NumComponents()));
  writer.Scalar("dim", static_cast<int>(Dim()));
  writer.Vec("weights", weights);
  writer.Mat("means", means);
  if (covariance_kind == CovarianceKind::kDiagonal) {
    writer.Mat("diag_vars", diag_vars);
  } else {
    for (size_t i = 0; i < full_covs.size(); ++i)
      writer.Mat("cov_" + std::to_string(i), full_covs[i]);
  }
  writer.Close();
}

GmmModel GmmModel::Load(const std::string& path) {
  ModelReader reader(path, "gmm");
  GmmModel model;
  model.covariance_kind =
      CovarianceKindFromName(reader.GetString("covariance_kind"));
  model.weights = reader.GetVector("weights");
  model.means = reader.GetMatrix("means");
  const int c = reader.GetInt("num_components");
  const int d = reader.GetInt("dim");
  if (model.weights.size() != c || model.means.rows() != c ||
      model.means.cols() != d)
    throw ParseError(path + ": model shape fields disagree with blocks");
  if (model.covariance_kind == CovarianceKind::kDiagonal) {
    model.diag_vars = reader.GetMatrix("diag_vars");
  } else {
    model.full_covs.reserve(static_cast<size_t>(c));
    for (int i = 0; i < c; ++i)
      model.full_covs.push_back(reader.GetMatrix("cov_" + std::to_string(i)));
  }
  model.Validate();
  return model;
}

void WriteGmmBlocks(ModelWriter* writer, const std::string& prefix,
                    const GmmModel& model) {
  model.Validate();
  writer->Scalar(prefix + "covariance_kind",
                 CovarianceKindName(model.covariance_kind));
  writer->Scalar(prefix + "num_components",
                 static_cast<int>(model.NumComponents()));
  writer->Vec(prefix + "weights", model.weights);
  writer->Mat(prefix + "means", model.means);
  if (model.covariance_kind == CovarianceKind::kDiagonal) {
    writer->Mat(prefix + "diag_vars", model.diag_vars);
  } else {
    for (size_t i = 0; i < model.full_covs.size(); ++i)
      writer->Mat(prefix + "cov_" + std::to_string(i), model.full_covs[i]);
  }
}

GmmModel ReadGmmBlocks(const ModelReader& reader, const std::string& prefix) {
  GmmModel model;
  model.covariance_kind =
      CovarianceKindFromName(reader.GetString(prefix + "covariance_kind"));
  model.weights = reader.GetVector(prefix + "weights");
  model.means = reader.GetMatrix(prefix + "means");
  const int c = reader.GetInt(prefix + "num_components");
  if (model.weights.size() != c)
    throw ParseError("model block '" + prefix +
                     "': component count disagrees with weights");
  if (model.covariance_kind == CovarianceKind::kDiagonal) {
    model.diag_vars = reader.GetMatrix(prefix + "diag_vars");
  } else {
    for (int i = 0; i < c; ++i)
      model.full_covs.push_back(
          reader.GetMatrix(prefix + "cov_" + std::to_string(i)));
  }
  model.Validate();
  return model;
}

GmmDensity::GmmDensity(const GmmModel& model) {
  model.Validate();
  kind_ = model.covariance_kind;
  log_weights_ = model.weights.array().log().matrix();
  means_ = model.means;
  const Eigen::Index c = model.NumComponents();
  const Eigen::Index d = model.Dim();
  const double half_d_log_2pi = 0.5 * static_cast<double>(d) * kLog2Pi;
  log_norm_.resize(c);
  if (kind_ == CovarianceKind::kDiagonal) {
    inv_vars_ = model.diag_vars.array().inverse().matrix();
    diag_cross_ = (inv_vars_.array() * means_.array()).matrix();
    diag_const_ =
        (means_.array().square() * inv_vars_.array()).rowwise().sum().matrix();
    for (Eigen::Index i = 0; i < c; ++i)
      log_norm_[i] = log_weights_[i] - half_d_log_2pi -
                     0.5 * model.diag_vars.row(i).array().log().sum();
  } else {
    chol_.resize(static_cast<size_t>(c));
    for (Eigen::Index i = 0; i < c; ++i) {
      Eigen::LLT<RowMatrix> llt(model.full_covs[static_cast<size_t>(i)]);
      if (llt.info() != Eigen::Success)
        throw NumericError("gmm: covariance of component " +
                           std::to_string(i) + " is not positive definite");
      chol_[static_cast<size_t>(i)] = llt.matrixL();
      log_norm_[i] =
          log_weights_[i] - half_d_log_2pi -
          chol_[static_cast<size_t>(i)].diagonal().array().log().sum();
    }
  }
}

Vector GmmDensity::ComponentLogDensities(const Vector& x) const {
  if (x.size() != Dim()) throw DimensionError("gmm: vector dimension mismatch");
  const Eigen::Index c = NumComponents();
  Vector out(c);
  if (kind_ == CovarianceKind::kDiagonal) {
    out = log_norm_ -
          0.5 * ((means_.rowwise() - x.transpose()).array().square() *
                 inv_vars_.array())
                    .rowwise()
                    .sum()
                    .matrix();
  } else {
    for (Eigen::Index i = 0; i < c; ++i) {
      Vector diff = x - means_.row(i).transpose();
      Vector z = chol_[static_cast<size_t>(i)]
                     .triangularView<Eigen::Lower>()
                     .solve(diff);
      out[i] = log_norm_[i] - 0.5 * z.squaredNorm();
    }
  }
  return out;
}

double GmmDensity::LogLikelihood(const Vector& x) const {
  return LogSumExp(ComponentLogDensities(x));
}

Vector GmmDensity::Responsibilities(const Vector& x, double* loglik) const {
  Vector logp = ComponentLogDensities(x);
  const double lse = LogSumExp(logp);
  if (loglik != nullptr) *loglik = lse;
  return (logp.array() - lse).exp();
}

void GmmDensity::BlockComponentLogDensities(const RowMatrix& data,
                                            std::ptrdiff_t begin,
                                            std::ptrdiff_t end,
                                            RowMatrix* out) const {
  const Eigen::Index rows = static_cast<Eigen::Index>(end - begin);
  const Eigen::Index c = NumComponents();
  out->resize(rows, c);
  const auto sub = data.middleRows(static_cast<Eigen::Index>(begin), rows);
  if (kind_ == CovarianceKind::kDiagonal) {
    out->noalias() = sub.array().square().matrix() * inv_vars_.transpose();
    out->noalias() -= 2.0 * sub * diag_cross_.transpose();
    out->array().rowwise() += diag_const_.transpose().array();
    *out *= -0.5;
    out->array().rowwise() += log_norm_.transpose().array();
  } else {
    for (Eigen::Index i = 0; i < c; ++i) {
      RowMatrix diff = sub.rowwise() - means_.row(i);
      Eigen::MatrixXd z = chol_[static_cast<size_t>(i)]
                              .triangularView<Eigen::Lower>()
                              .solve(diff.transpose());
      out->col(i) =
          (-0.5 * z.colwise().squaredNorm().transpose().array() + log_norm_[i])
              .matrix();
    }
  }
}

Vector GmmDensity::BatchLogLikelihood(const RowMatrix& data) const {
  if (data.cols() != Dim())
    throw DimensionError("gmm: data dimension mismatch");
  const Eigen::Index n = data.rows();
  Vector out(n);
  ParallelFor((n + kReduceBlock - 1) / kReduceBlock, [&](std::ptrdiff_t b) {
    const std::ptrdiff_t begin = b * kReduceBlock;
    const std::ptrdiff_t end =
        std::min<std::ptrdiff_t>(begin + kReduceBlock, n);
    RowMatrix logp;
    BlockComponentLogDensities(data, begin, end, &logp);
    for (std::ptrdiff_t i = begin; i < end; ++i) {
      const auto row = logp.row(static_cast<Eigen::Index>(i - begin));
      const double m = row.maxCoeff();
      out[static_cast<Eigen::Index>(i)] =
          std::isfinite(m) ? m + std::log((row.array() - m).exp().sum()) : m;
    }
  });
  return out;
}

MapStats MapStats::Zero(Eigen::Index c, Eigen::Index d) {
  MapStats stats;
  stats.n = Vector::Zero(c);
  stats.sum = RowMatrix::Zero(c, d);
  return stats;
}

void MapStats::Add(const Vector& gamma, const Vector& x) {
  n += gamma;
  sum.noalias() += gamma * x.transpose();
}

void MapStats::Subtract(const Vector& gamma, const Vector& x) {
  n -= gamma;
  sum.noalias() -= gamma * x.transpose();
}

void MapStats::AddStats(const MapStats& other) {
  n += other.n;
  sum += other.sum;
}

EmStats AccumulateEmStats(const GmmDensity& density, const RowMatrix& data,
                          bool with_second) {
  if (data.cols() != density.Dim())
    throw DimensionError("gmm: data dimension mismatch");
  const Eigen::Index c = density.NumComponents();
  const Eigen::Index d = density.Dim();
  const bool full = with_second && !density.IsDiagonal();

  auto make = [&]() {
    EmStats s;
    s.loglik = 0.0;
    s.n = Vector::Zero(c);
    s.first = RowMatrix::Zero(c, d);
    if (with_second && density.IsDiagonal()) s.second = RowMatrix::Zero(c, d);
    if (full)
      s.second_full.assign(static_cast<size_t>(c), RowMatrix::Zero(d, d));
    return s;
  };
  auto accumulate = [&](EmStats& p, std::ptrdiff_t begin, std::ptrdiff_t end) {
    RowMatrix logp;
    density.BlockComponentLogDensities(data, begin, end, &logp);
    const Eigen::Index rows = static_cast<Eigen::Index>(end - begin);
    const auto sub = data.middleRows(static_cast<Eigen::Index>(begin), rows);
    Vector lse(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto row = logp.row(i);
      const double m = row.maxCoeff();
      lse[i] = std::isfinite(m)
                   ? m + std::log((row.array() - m).exp().sum())
                   : m;
    }
    RowMatrix gamma = (logp.colwise() - lse).array().exp().matrix();
    p.loglik += lse.sum();
    p.n += gamma.colwise().sum().transpose();
    p.first.noalias() += gamma.transpose() * sub;
    if (with_second && density.IsDiagonal())
      p.second.noalias() += gamma.transpose() * sub.array().square().matrix();
    if (full) {
      for (Eigen::Index i = 0; i < c; ++i) {
        RowMatrix weighted =
            (sub.array().colwise() * gamma.col(i).array()).matrix();
        p.second_full[static_cast<size_t>(i)].noalias() +=
            sub.transpose() * weighted;
      }
    }
  };
  auto fold = [&](EmStats& total, const EmStats& p) {
    total.loglik += p.loglik;
    total.n += p.n;
    total.first += p.first;
    if (with_second && density.IsDiagonal()) total.second += p.second;
    if (full)
      for (size_t i = 0; i < p.second_full.size(); ++i)
        total.second_full[i] += p.second_full[i];
  };
  return BlockedReduce<EmStats>(data.rows(), make, accumulate, fold);
}

GmmModel FitGmmEm(const RowMatrix& data, int c, const EmConfig& cfg,
                  EmReport* report) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (c < 1) throw DomainError("gmm: component count must be >= 1");
  if (n < c) throw DomainError("gmm: fewer data points than components");
  CheckTrainingData(data, "gmm");

  const Vector gmean = data.colwise().mean().transpose();
  const Vector gvar = GlobalVariance(data, gmean);
  const Vector floor_diag =
      (gvar * cfg.var_floor_scale).cwiseMax(kMinVariance);
  const double floor_eig =
      std::max(cfg.var_floor_scale * gvar.mean(), kMinVariance);

  GmmModel model;
  model.covariance_kind = cfg.covariance_kind;
  model.weights = Vector::Constant(c, 1.0 / c);
  Rng rng(cfg.seed);
  model.means = KMeansPlusPlusMeans(data, c, &rng);
  if (cfg.covariance_kind == CovarianceKind::kDiagonal) {
    model.diag_vars =
        gvar.cwiseMax(floor_diag).transpose().replicate(c, 1);
  } else {
    const RowMatrix gcov =
        FloorEigenvalues(GlobalCovariance(data, gmean), floor_eig);
    model.full_covs.assign(static_cast<size_t>(c), gcov);
  }

  std::vector<char> reseeded(static_cast<size_t>(c), 0);
  if (report != nullptr) *report = EmReport();
  double prev_mean_ll = -std::numeric_limits<double>::infinity();
  int iter = 0;
  for (iter = 0; iter < cfg.max_iter; ++iter) {
    GmmDensity density(model);
    EmStats stats = AccumulateEmStats(density, data, true);
    if (report != nullptr) report->loglik_history.push_back(stats.loglik);
    const double mean_ll = stats.loglik / static_cast<double>(n);
    if (iter > 0 && mean_ll - prev_mean_ll < cfg.tol) {
      if (report != nullptr) report->converged = true;
      break;
    }
    prev_mean_ll = mean_ll;

    // M-step; components whose occupancy collapsed are re-seeded at the point
    // the current model likes least.
    std::vector<Eigen::Index> collapsed;
    for (Eigen::Index i = 0; i < c; ++i) {
      const double w = stats.n[i] / static_cast<double>(n);
      if (w < kCollapseWeight) {
        if (reseeded[static_cast<size_t>(i)])
          throw NumericError("gmm: component " + std::to_string(i) +
                             " collapsed twice");
        reseeded[static_cast<size_t>(i)] = 1;
        collapsed.push_back(i);
        continue;
      }
      model.weights[i] = w;
      model.means.row(i) = stats.first.row(i) / stats.n[i];
      if (cfg.covariance_kind == CovarianceKind::kDiagonal) {
        Vector var = (stats.second.row(i) / stats.n[i]).transpose() -
                     model.means.row(i).transpose().cwiseAbs2();
        model.diag_vars.row(i) = var.cwiseMax(floor_diag).transpose();
      } else {
        RowMatrix cov =
            stats.second_full[static_cast<size_t>(i)] / stats.n[i] -
            model.means.row(i).transpose() * model.means.row(i);
        model.full_covs[static_cast<size_t>(i)] =
            FloorEigenvalues(cov, floor_eig);
      }
    }
    if (!collapsed.empty()) {
      if (report != nullptr)
        report->reseed_count += static_cast<int>(collapsed.size());
      Vector ll = density.BatchLogLikelihood(data);
      for (Eigen::Index i : collapsed) {
        Eigen::Index worst;
        ll.minCoeff(&worst);
        model.means.row(i) = data.row(worst);
        model.weights[i] = 1.0 / c;
        if (cfg.covariance_kind == CovarianceKind::kDiagonal)
          model.diag_vars.row(i) = gvar.cwiseMax(floor_diag).transpose();
        else
          model.full_covs[static_cast<size_t>(i)] =
              FloorEigenvalues(GlobalCovariance(data, gmean), floor_eig);
        // Avoid seeding two collapsed components at the same point.
        ll[worst] = std::numeric_limits<double>::infinity();
      }
      // Monotone convergence restarts after a re-seed.
      prev_mean_ll = -std::numeric_limits<double>::infinity();
    }
    model.weights /= model.weights.sum();
  }
  if (report != nullptr) report->iterations = iter;
  model.Validate();
  return model;
}

double GmmLogLikelihood(const GmmModel& model, const Vector& x) {
  return GmmDensity(model).LogLikelihood(x);
}

MapStats AccumulateMapStats(const GmmDensity& ubm, const RowMatrix& data) {
  EmStats stats = AccumulateEmStats(ubm, data, /*with_second=*/false);
  MapStats out;
  out.n = stats.n;
  out.sum = stats.first;
  return out;
}

GmmModel MapAdaptFromStats(const GmmModel& ubm, const MapStats& stats,
                           double r) {
  if (r < 0.0) throw DomainError("gmm: negative relevance factor");
  if (stats.n.size() != ubm.NumComponents() ||
      stats.sum.rows() != ubm.NumComponents() ||
      stats.sum.cols() != ubm.Dim())
    throw DimensionError("gmm: adaptation statistics shape mismatch");
  GmmModel adapted = ubm;
  for (Eigen::Index i = 0; i < ubm.NumComponents(); ++i) {
    const double ni = stats.n[i];
    if (ni <= 0.0) continue;  // no occupancy: the prior mean stands
    const double alpha = ni / (ni + r);
    adapted.means.row(i) = alpha * (stats.sum.row(i) / ni) +
                           (1.0 - alpha) * ubm.means.row(i);
  }
  return adapted;
}

GmmModel MapAdapt(const GmmModel& ubm, const RowMatrix& data, double r) {
  if (data.rows() < 1) throw DomainError("gmm: empty adaptation data");
  GmmDensity density(ubm);
  return MapAdaptFromStats(ubm, AccumulateMapStats(density, data), r);
}

// ---------------------------------------------------------------------------
// Component-count selection: component-wise EM with annihilation.
// ---------------------------------------------------------------------------

namespace {

// Mutable working state for one mixture during annihilation EM.  Dead
// components keep stale parameters; only log_w = -inf marks them.
struct MmlState {
  CovarianceKind kind;
  Eigen::Index d = 0;
  Vector weights;                 // kmax; 0 for dead components
  RowMatrix means;                // kmax x d
  RowMatrix diag_vars;            // kmax x d
  std::vector<RowMatrix> chol;    // kmax lower factors (full kind)
  Vector log_gauss_norm;          // kmax: -D/2 log 2pi - log|Sigma|^(1/2)
  RowMatrix log_gauss;            // n x kmax: log N(x_i; theta_m), no weight
  Vector lse;                     // n: log sum_m w_m N(x_i; theta_m)

  bool Alive(Eigen::Index m) const { return weights[m] > 0.0; }
};

// Refreshes column m of log_gauss from the component's current parameters.
void RefreshLogGaussColumn(const RowMatrix& data, Eigen::Index m,
                           MmlState* st) {
  const Eigen::Index n = data.rows();
  if (st->kind == CovarianceKind::kDiagonal) {
    const Vector inv = st->diag_vars.row(m).transpose().cwiseInverse();
    st->log_gauss_norm[m] = -0.5 * static_cast<double>(st->d) * kLog2Pi -
                            0.5 * st->diag_vars.row(m).array().log().sum();
    const Vector mu = st->means.row(m).transpose();
    ParallelFor(n, [&](std::ptrdiff_t i) {
      const auto idx = static_cast<Eigen::Index>(i);
      double q = 0.0;
      for (Eigen::Index j = 0; j < st->d; ++j) {
        const double diff = data(idx, j) - mu[j];
        q += diff * diff * inv[j];
      }
      st->log_gauss(idx, m) = st->log_gauss_norm[m] - 0.5 * q;
    });
  } else {
    const RowMatrix& l = st->chol[static_cast<size_t>(m)];
    st->log_gauss_norm[m] = -0.5 * static_cast<double>(st->d) * kLog2Pi -
                            l.diagonal().array().log().sum();
    RowMatrix diff = data.rowwise() - st->means.row(m);
    Eigen::MatrixXd z =
        l.triangularView<Eigen::Lower>().solve(diff.transpose());
    st->log_gauss.col(m) =
        (-0.5 * z.colwise().squaredNorm().transpose().array() +
         st->log_gauss_norm[m])
            .matrix();
  }
}

// Recomputes the per-row log-likelihood over alive components.
void RefreshLse(MmlState* st) {
  const Eigen::Index n = st->log_gauss.rows();
  const Eigen::Index kmax = st->weights.size();
  Vector logw(kmax);
  for (Eigen::Index m = 0; m < kmax; ++m)
    logw[m] = st->Alive(m) ? std::log(st->weights[m])
                           : -std::numeric_limits<double>::infinity();
  ParallelFor(n, [&](std::ptrdiff_t i) {
    const auto idx = static_cast<Eigen::Index>(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < kmax; ++m) {
      if (!st->Alive(m)) continue;
      const double v = logw[m] + st->log_gauss(idx, m);
      if (v > mx) mx = v;
    }
    double s = 0.0;
    for (Eigen::Index m = 0; m < kmax; ++m) {
      if (!st->Alive(m)) continue;
      s += std::exp(logw[m] + st->log_gauss(idx, m) - mx);
    }
    st->lse[idx] = mx + std::log(s);
  });
}

// Message length of the current state (natural-log domain, to be minimized).
double MessageLength(const MmlState& st, double np, double loglik) {
  const double n = static_cast<double>(st.log_gauss.rows());
  double sum_logw = 0.0;
  int knz = 0;
  for (Eigen::Index m = 0; m < st.weights.size(); ++m) {
    if (!st.Alive(m)) continue;
    sum_logw += std::log(n * st.weights[m] / 12.0);
    ++knz;
  }
  return 0.5 * np * sum_logw + 0.5 * knz * std::log(n / 12.0) +
         0.5 * knz * np - loglik;
}

// Extracts the alive components into a standalone model.
GmmModel SnapshotAlive(const MmlState& st) {
  std::vector<Eigen::Index> alive;
  for (Eigen::Index m = 0; m < st.weights.size(); ++m)
    if (st.Alive(m)) alive.push_back(m);
  GmmModel model;
  model.covariance_kind = st.kind;
  const Eigen::Index k = static_cast<Eigen::Index>(alive.size());
  model.weights.resize(k);
  model.means.resize(k, st.d);
  if (st.kind == CovarianceKind::kDiagonal)
    model.diag_vars.resize(k, st.d);
  else
    model.full_covs.resize(static_cast<size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index m = alive[static_cast<size_t>(j)];
    model.weights[j] = st.weights[m];
    model.means.row(j) = st.means.row(m);
    if (st.kind == CovarianceKind::kDiagonal) {
      model.diag_vars.row(j) = st.diag_vars.row(m);
    } else {
      const RowMatrix& l = st.chol[static_cast<size_t>(m)];
      RowMatrix cov = l * l.transpose();
      model.full_covs[static_cast<size_t>(j)] = 0.5 * (cov + cov.transpose());
    }
  }
  model.weights /= model.weights.sum();
  return model;
}

struct ComponentMoments {
  double n = 0.0;
  Vector first;
  Vector second_diag;
  RowMatrix second_full;
};

// Posterior-weighted moments of one component, reduced deterministically.
ComponentMoments AccumulateComponentMoments(const RowMatrix& data,
                                            const MmlState& st,
                                            Eigen::Index m, double log_w) {
  const Eigen::Index d = data.cols();
  const bool diagonal = st.kind == CovarianceKind::kDiagonal;
  auto make = [&]() {
    ComponentMoments p;
    p.first = Vector::Zero(d);
    if (diagonal)
      p.second_diag = Vector::Zero(d);
    else
      p.second_full = RowMatrix::Zero(d, d);
    return p;
  };
  auto accumulate = [&](ComponentMoments& p, std::ptrdiff_t begin,
                        std::ptrdiff_t end) {
    const Eigen::Index rows = static_cast<Eigen::Index>(end - begin);
    const auto sub = data.middleRows(static_cast<Eigen::Index>(begin), rows);
    Vector gamma =
        (st.log_gauss.col(m).segment(static_cast<Eigen::Index>(begin), rows)
             .array() +
         log_w -
         st.lse.segment(static_cast<Eigen::Index>(begin), rows).array())
            .exp()
            .matrix();
    p.n += gamma.sum();
    p.first.noalias() += sub.transpose() * gamma;
    if (diagonal) {
      p.second_diag.noalias() +=
          sub.array().square().matrix().transpose() * gamma;
    } else {
      RowMatrix weighted = (sub.array().colwise() * gamma.array()).matrix();
      p.second_full.noalias() += sub.transpose() * weighted;
    }
  };
  auto fold = [&](ComponentMoments& total, const ComponentMoments& p) {
    total.n += p.n;
    total.first += p.first;
    if (diagonal)
      total.second_diag += p.second_diag;
    else
      total.second_full += p.second_full;
  };
  return BlockedReduce<ComponentMoments>(data.rows(), make, accumulate, fold);
}

}  // namespace

GmmModel FitGmmMml(const RowMatrix& data, int c_max, const EmConfig& cfg,
                   MmlReport* report) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (c_max < 1) throw DomainError("gmm: component cap must be >= 1");
  if (n <= c_max)
    throw DomainError("gmm: need more data points than the component cap");
  CheckTrainingData(data, "gmm");

  const Vector gmean = data.colwise().mean().transpose();
  const Vector gvar = GlobalVariance(data, gmean);
  const Vector floor_diag =
      (gvar * cfg.var_floor_scale).cwiseMax(kMinVariance);
  const double floor_eig =
      std::max(cfg.var_floor_scale * gvar.mean(), kMinVariance);
  const double np = ParamsPerComponent(cfg.covariance_kind, d);

  MmlState st;
  st.kind = cfg.covariance_kind;
  st.d = d;
  st.weights = Vector::Constant(c_max, 1.0 / c_max);
  Rng rng(cfg.seed);
  st.means = KMeansPlusPlusMeans(data, c_max, &rng);
  st.log_gauss_norm.resize(c_max);
  st.log_gauss.resize(n, c_max);
  st.lse.resize(n);
  if (st.kind == CovarianceKind::kDiagonal) {
    st.diag_vars = gvar.cwiseMax(floor_diag).transpose().replicate(c_max, 1);
  } else {
    const RowMatrix gcov =
        FloorEigenvalues(GlobalCovariance(data, gmean), floor_eig);
    Eigen::LLT<RowMatrix> llt(gcov);
    if (llt.info() != Eigen::Success)
      throw NumericError("gmm: global covariance not positive definite");
    st.chol.assign(static_cast<size_t>(c_max), RowMatrix(llt.matrixL()));
  }
  for (Eigen::Index m = 0; m < c_max; ++m) RefreshLogGaussColumn(data, m, &st);
  RefreshLse(&st);

  GmmModel best;
  double best_length = std::numeric_limits<double>::infinity();
  double best_loglik = 0.0;
  int best_c = 0;
  if (report != nullptr) *report = MmlReport();

  int knz = c_max;
  const int kmin = 1;
  while (true) {
    // Component-wise EM sweeps until the message length stabilizes.
    double prev_length = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < cfg.max_iter && knz >= kmin; ++sweep) {
      for (Eigen::Index m = 0; m < c_max && knz >= kmin; ++m) {
        if (!st.Alive(m)) continue;
        const double log_w = std::log(st.weights[m]);
        ComponentMoments mom =
            AccumulateComponentMoments(data, st, m, log_w);
        // Annihilating weight update: occupancy below half the component's
        // parameter count cannot pay for its own description.
        st.weights[m] =
            std::max(0.0, mom.n - 0.5 * np) / static_cast<double>(n);
        const double total = st.weights.sum();
        if (total <= 0.0)
          throw NumericError("gmm: all components annihilated");
        st.weights /= total;
        if (st.weights[m] > 0.0) {
          const Vector mu = mom.first / mom.n;
          st.means.row(m) = mu.transpose();
          if (st.kind == CovarianceKind::kDiagonal) {
            Vector var = mom.second_diag / mom.n - mu.cwiseAbs2();
            st.diag_vars.row(m) = var.cwiseMax(floor_diag).transpose();
          } else {
            RowMatrix cov =
                mom.second_full / mom.n - mu * mu.transpose();
            cov = FloorEigenvalues(cov, floor_eig);
            Eigen::LLT<RowMatrix> llt(cov);
            if (llt.info() != Eigen::Success)
              throw NumericError("gmm: component covariance factorization "
                                 "failed during selection");
            st.chol[static_cast<size_t>(m)] = llt.matrixL();
          }
          RefreshLogGaussColumn(data, m, &st);
        } else {
          --knz;
        }
        RefreshLse(&st);
      }
      const double loglik = st.lse.sum();
      const double length = MessageLength(st, np, loglik);
      if (std::isfinite(prev_length) &&
          std::abs(length - prev_length) <
              kMmlRelTol * std::abs(prev_length))
        break;
      prev_length = length;
    }

    const double loglik = st.lse.sum();
    const double length = MessageLength(st, np, loglik);
    if (report != nullptr) report->candidate_cs.push_back(knz);
    if (length < best_length) {
      best_length = length;
      best_loglik = loglik;
      best = SnapshotAlive(st);
      best_c = knz;
    }
    if (knz <= kmin) break;

    // Forced annihilation: retire the lightest component and continue.
    Eigen::Index lightest = -1;
    for (Eigen::Index m = 0; m < c_max; ++m) {
      if (!st.Alive(m)) continue;
      if (lightest < 0 || st.weights[m] < st.weights[lightest]) lightest = m;
    }
    st.weights[lightest] = 0.0;
    st.weights /= st.weights.sum();
    --knz;
    RefreshLse(&st);
  }

  if (report != nullptr) {
    report->selected_c = best_c;
    report->message_length = best_length;
    report->loglik = best_loglik;
  }
  best.Validate();
  return best;
}

}  // namespace lrfuse
