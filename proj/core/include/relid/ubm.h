// core/include/relid/ubm.h

// Copyright 2026  relid contributors

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

#ifndef RELID_UBM_H_
#define RELID_UBM_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relid/common.h"
#include "relid/corpus.h"

namespace relid {

inline constexpr double kGmmVarianceFloor = 1e-6;
inline constexpr double kGmmWeightFloor = 1e-8;

// Diagonal-covariance GMM; the universal background model.
class DiagonalGmm {
 public:
  DiagonalGmm() = default;
  // Validates the invariants (weights sum to 1 and are positive, variances
  // at or above the floor).
  DiagonalGmm(Vector weights, Matrix means, Matrix variances);

  int NumComponents() const { return static_cast<int>(weights_.size()); }
  int Dim() const { return static_cast<int>(means_.cols()); }
  const Vector &weights() const { return weights_; }
  const Matrix &means() const { return means_; }
  const Matrix &variances() const { return variances_; }

  // Per-component log(w_c N(x; mu_c, Sigma_c)) for each row of x (N x C).
  Matrix ComponentLogLikes(const Matrix &x) const;
  // Responsibilities p(c|x) for each row of x (N x C); rows sum to 1.
  Matrix Posteriors(const Matrix &x) const;
  Vector Posteriors(const Vector &x) const;
  // Sum over rows of log p(x_i).
  double LogLikelihood(const Matrix &x) const;

  // FNV-1a over the serialized model; binds a TV model to its UBM.
  std::uint64_t Hash() const;

  void Write(std::ostream &os) const;
  static DiagonalGmm Read(std::istream &is);
  void Write(const std::string &path) const;
  static DiagonalGmm Read(const std::string &path);

 private:
  void Precompute();

  Vector weights_;
  Matrix means_;
  Matrix variances_;
  // Cached: inverse variances, means / variances, per-component constant.
  Matrix inv_vars_;
  Matrix means_invvars_;
  Vector gconst_;
};

struct UbmTrainOptions {
  int num_components = 64;
  int iters = 10;
  // EM iterations run after each binary split before the final size.
  int split_iters = 3;
  std::uint64_t seed = 1;
};

struct UbmTrainResult {
  DiagonalGmm gmm;
  // Total log-likelihood before each final-size EM iteration, then after the
  // last one (iters + 1 values).
  std::vector<double> log_likelihoods;
};

// EM from binary splitting (1 -> 2 -> 4 -> ... -> C) with +/- 0.1 std mean
// perturbation. frames is N x D.
UbmTrainResult TrainUbm(const Matrix &frames, const UbmTrainOptions &options);

// Voiced frames of every utterance, taking every stride-th voiced frame.
Matrix PoolVoicedFrames(const std::vector<Utterance> &utts, int stride = 1);

// Voiced rows of a sequence as double precision.
Matrix VoicedFrames(const FeatureSequence &f);

}  // namespace relid

#endif  // RELID_UBM_H_
