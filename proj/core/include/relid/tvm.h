// core/include/relid/tvm.h

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

#ifndef RELID_TVM_H_
#define RELID_TVM_H_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "relid/bw-stats.h"
#include "relid/common.h"
#include "relid/corpus.h"
#include "relid/ubm.h"

namespace relid {

// Total-variability model M(s) = M0 + T y(s), y ~ N(0, I), bound to a UBM
// that supplies M0 and the diagonal covariances. T is CD x R with rows in
// component-major order (row c * D + d).
class TvModel {
 public:
  TvModel() = default;
  TvModel(std::shared_ptr<const DiagonalGmm> ubm, Matrix t);

  int Rank() const { return static_cast<int>(t_.cols()); }
  int NumComponents() const { return ubm_->NumComponents(); }
  int Dim() const { return ubm_->Dim(); }
  const Matrix &t() const { return t_; }
  const DiagonalGmm &ubm() const { return *ubm_; }
  std::shared_ptr<const DiagonalGmm> ubm_ptr() const { return ubm_; }

  // Posterior precision L = I + sum_c N_c T_c' S_c^-1 T_c and linear term
  // b = sum_c T_c' S_c^-1 F_c of the latent given the stats.
  void PosteriorTerms(const BwStats &stats, Matrix *precision, Vector *linear) const;

  // MAP i-vector y* = L^-1 b.
  Vector ExtractIvector(const BwStats &stats) const;

  void Write(std::ostream &os) const;
  // Fails unless the file's embedded UBM hash matches `ubm`.
  static TvModel Read(std::istream &is, std::shared_ptr<const DiagonalGmm> ubm);
  void Write(const std::string &path) const;
  static TvModel Read(const std::string &path, std::shared_ptr<const DiagonalGmm> ubm);

 private:
  void Precompute();
  void CheckStats(const BwStats &stats) const;

  std::shared_ptr<const DiagonalGmm> ubm_;
  Matrix t_;
  Matrix sinv_t_;     // CD x R, Sigma^-1 T
  Matrix quad_terms_; // R*R x C, column c = vec(T_c' S_c^-1 T_c)
};

struct TvmTrainOptions {
  int rank = 50;
  int iters = 10;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
};

struct TvmTrainResult {
  TvModel model;
  // EM auxiliary objective (stats log-likelihood up to a T-independent
  // constant) at the initialization and after each iteration.
  std::vector<double> objectives;
};

// Seeded Gaussian initialization of T, scaled by init_scale.
TvModel InitTvModel(std::shared_ptr<const DiagonalGmm> ubm, int rank,
                    std::uint64_t seed, double init_scale = 0.1);

// Maximum-likelihood EM. iters = 0 returns the initialization.
TvmTrainResult TrainTvm(std::shared_ptr<const DiagonalGmm> ubm,
                        const std::vector<BwStats> &stats,
                        const TvmTrainOptions &options);

// Sum over utterances of -1/2 log|L| + 1/2 b' L^-1 b.
double TvmObjective(const TvModel &model, const std::vector<BwStats> &stats);

// Number of full windows, floor((T - win) / hop) + 1, or 1 when T < win.
int NumSegmentWindows(int num_frames, int win_frames, int hop_frames);

// One i-vector per window of win_frames frames shifted by hop_frames, from
// unweighted stats over the window's voiced frames. Windows without voiced
// frames give the zero vector.
std::vector<Vector> SegmentIvectors(const TvModel &model, const FeatureSequence &f,
                                    int win_frames = 100, int hop_frames = 20);

// Stacks vectors as rows.
Matrix StackRows(const std::vector<Vector> &vs);

}  // namespace relid

#endif  // RELID_TVM_H_
