// include/lrfuse/preprocess.h

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
// Vector conditioning ahead of every scorer. The pipeline order is fixed:
// center/whiten (fit on dev), length-normalize, then LDA (fit on labeled
// train). Cosine scoring consumes the normalized vectors without LDA; the
// GMM and DNN subsystems consume the LDA projections.

#ifndef LRFUSE_PREPROCESS_H_
#define LRFUSE_PREPROCESS_H_

#include <string>

#include "lrfuse/types.h"

namespace lrfuse {

// Centering plus inverse-principal-square-root whitening fitted on the dev
// corpus. `whitener` is symmetric positive definite by construction.
struct WhitenTransform {
  Vector mean;
  RowMatrix whitener;  // D x D
  double eps = 1e-8;   // eigenvalue floor used at fit time

  void Save(const std::string& path) const;
  static WhitenTransform Load(const std::string& path);
};

// Rows are the top generalized eigenvectors of (between-class scatter,
// within-class scatter + ridge), eigenvalue-descending, each row's first
// non-negligible entry made positive so refits are reproducible.
struct LdaTransform {
  RowMatrix projection;  // K x D
  int output_dim = 0;

  void Save(const std::string& path) const;
  static LdaTransform Load(const std::string& path);
};

// Requires at least D + 1 records. eps floors the covariance eigenvalues so
// the inverse square root stays finite on rank-deficient fits.
WhitenTransform FitCenterWhiten(const Corpus& dev, double eps = 1e-8);

Vector ApplyCenterWhiten(const WhitenTransform& t, const Vector& v);

// Unit-sphere projection. Zero input is a domain error.
Vector LengthNormalize(const Vector& v);

// ridge_scale scales trace(S_within)/D into the ridge added to the
// within-class scatter before the generalized eigensolve.
LdaTransform FitLda(const Corpus& train, int k, double ridge_scale = 1e-6);

Vector ApplyLda(const LdaTransform& t, const Vector& v);

// Corpus-level conveniences; durations, ids and labels pass through.
Corpus ApplyCenterWhitenCorpus(const WhitenTransform& t, const Corpus& in,
                               bool normalize);
Corpus ApplyLdaCorpus(const LdaTransform& t, const Corpus& in);

}  // namespace lrfuse

#endif  // LRFUSE_PREPROCESS_H_
