// core/src/tvm.cc

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

#include "relid/tvm.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "relid/binary-io.h"
#include "relid/parallel.h"

namespace relid {

TvModel::TvModel(std::shared_ptr<const DiagonalGmm> ubm, Matrix t)
    : ubm_(std::move(ubm)), t_(std::move(t)) {
  Require(ubm_ != nullptr, ErrorKind::kInvalidArgument, "TV model needs a UBM");
  Require(t_.rows() == static_cast<Eigen::Index>(ubm_->NumComponents()) * ubm_->Dim(),
          ErrorKind::kDimensionMismatch, "T must have C*D rows");
  Require(t_.cols() >= 1 && t_.cols() <= t_.rows(), ErrorKind::kInvalidArgument,
          "TV rank must satisfy 1 <= R <= CD");
  Require(t_.allFinite(), ErrorKind::kNumerical, "non-finite T");
  Precompute();
}

void TvModel::Precompute() {
  const int c = NumComponents(), d = Dim(), r = Rank();
  sinv_t_.resize(t_.rows(), r);
  quad_terms_.resize(static_cast<Eigen::Index>(r) * r, c);
  for (int k = 0; k < c; ++k) {
    auto tk = t_.middleRows(static_cast<Eigen::Index>(k) * d, d);
    Matrix sinv_tk = ubm_->variances().row(k).cwiseInverse().asDiagonal() * tk;
    sinv_t_.middleRows(static_cast<Eigen::Index>(k) * d, d) = sinv_tk;
    Matrix quad = tk.transpose() * sinv_tk;
    quad_terms_.col(k) = Eigen::Map<const Vector>(quad.data(), quad.size());
  }
}

void TvModel::CheckStats(const BwStats &stats) const {
  Require(stats.NumComponents() == NumComponents() && stats.Dim() == Dim(),
          ErrorKind::kDimensionMismatch, "stats are not dimensioned to the UBM");
  Require(stats.n.allFinite() && stats.f.allFinite(), ErrorKind::kNumerical,
          "non-finite stats");
}

void TvModel::PosteriorTerms(const BwStats &stats, Matrix *precision,
                             Vector *linear) const {
  CheckStats(stats);
  const int r = Rank();
  Vector lvec = quad_terms_ * stats.n;
  *precision = Eigen::Map<const Matrix>(lvec.data(), r, r);
  precision->diagonal().array() += 1.0;
  // F is C x D row-major by component; flatten to component-major CD.
  Matrix ft = stats.f.transpose();
  Eigen::Map<const Vector> fflat(ft.data(), ft.size());
  *linear = sinv_t_.transpose() * fflat;
}

Vector TvModel::ExtractIvector(const BwStats &stats) const {
  Matrix precision;
  Vector linear;
  PosteriorTerms(stats, &precision, &linear);
  Eigen::LLT<Matrix> llt(precision);
  Require(llt.info() == Eigen::Success, ErrorKind::kNumerical,
          "i-vector precision is not positive definite");
  return llt.solve(linear);
}

namespace {
constexpr std::string_view kTvmMagic = "RTVM";
}  // namespace

void TvModel::Write(std::ostream &os) const {
  io::WriteMagic(os, kTvmMagic);
  io::WriteU32(os, static_cast<std::uint32_t>(NumComponents()));
  io::WriteU32(os, static_cast<std::uint32_t>(Dim()));
  io::WriteU32(os, static_cast<std::uint32_t>(Rank()));
  io::WriteF32Matrix(os, t_);
  io::WriteU64(os, ubm_->Hash());
}

TvModel TvModel::Read(std::istream &is, std::shared_ptr<const DiagonalGmm> ubm) {
  io::ExpectMagic(is, kTvmMagic);
  std::uint32_t c = io::ReadU32(is), d = io::ReadU32(is), r = io::ReadU32(is);
  io::CheckDims(std::uint64_t{c} * d, r, "TV matrix");
  Require(ubm != nullptr, ErrorKind::kInvalidArgument, "TV model needs a UBM");
  Require(static_cast<int>(c) == ubm->NumComponents() &&
              static_cast<int>(d) == ubm->Dim(),
          ErrorKind::kDimensionMismatch, "TV model does not match UBM dimensions");
  Matrix t = io::ReadF32Matrix(is, std::size_t{c} * d, r);
  std::uint64_t hash = io::ReadU64(is);
  Require(hash == ubm->Hash(), ErrorKind::kDimensionMismatch,
          "TV model was trained against a different UBM");
  return TvModel(std::move(ubm), std::move(t));
}

void TvModel::Write(const std::string &path) const {
  auto os = io::OpenOut(path);
  Write(os);
}

TvModel TvModel::Read(const std::string &path, std::shared_ptr<const DiagonalGmm> ubm) {
  auto is = io::OpenIn(path);
  return Read(is, std::move(ubm));
}

TvModel InitTvModel(std::shared_ptr<const DiagonalGmm> ubm, int rank,
                    std::uint64_t seed, double init_scale) {
  Require(ubm != nullptr, ErrorKind::kInvalidArgument, "TV model needs a UBM");
  Require(rank >= 1, ErrorKind::kInvalidArgument, "rank must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix t(static_cast<Eigen::Index>(ubm->NumComponents()) * ubm->Dim(), rank);
  for (Eigen::Index j = 0; j < t.cols(); ++j)
    for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = init_scale * normal(rng);
  return TvModel(std::move(ubm), std::move(t));
}

namespace {

struct TvmAccumulators {
  Matrix quad;     // R*R x C: sum_s vec(E[yy']) N_c(s)
  Matrix linear;   // CD x R: sum_s F(s) E[y]'
  double objective = 0.0;
};

constexpr std::size_t kUttsPerShard = 16;

TvmAccumulators EStep(const TvModel &model, const std::vector<BwStats> &stats) {
  const int r = model.Rank(), c = model.NumComponents(), d = model.Dim();
  const std::size_t shards = (stats.size() + kUttsPerShard - 1) / kUttsPerShard;
  std::vector<TvmAccumulators> parts(shards);
  ParallelFor(shards, [&](std::size_t s) {
    TvmAccumulators &a = parts[s];
    a.quad = Matrix::Zero(static_cast<Eigen::Index>(r) * r, c);
    a.linear = Matrix::Zero(static_cast<Eigen::Index>(c) * d, r);
    std::size_t end = std::min(stats.size(), (s + 1) * kUttsPerShard);
    for (std::size_t u = s * kUttsPerShard; u < end; ++u) {
      Matrix precision;
      Vector lin;
      model.PosteriorTerms(stats[u], &precision, &lin);
      Eigen::LLT<Matrix> llt(precision);
      Require(llt.info() == Eigen::Success, ErrorKind::kNumerical,
              "i-vector precision is not positive definite");
      Vector mean = llt.solve(lin);
      Matrix second = llt.solve(Matrix::Identity(r, r));
      second += mean * mean.transpose();
      Eigen::Map<const Vector> svec(second.data(), second.size());
      a.quad += svec * stats[u].n.transpose();
      Matrix ft = stats[u].f.transpose();
      Eigen::Map<const Vector> fflat(ft.data(), ft.size());
      a.linear += fflat * mean.transpose();
      double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
      a.objective += -0.5 * logdet + 0.5 * lin.dot(mean);
    }
  });
  TvmAccumulators total = std::move(parts[0]);
  for (std::size_t s = 1; s < shards; ++s) {
    total.quad += parts[s].quad;
    total.linear += parts[s].linear;
    total.objective += parts[s].objective;
  }
  return total;
}

}  // namespace

double TvmObjective(const TvModel &model, const std::vector<BwStats> &stats) {
  Require(!stats.empty(), ErrorKind::kInvalidArgument, "no stats");
  return EStep(model, stats).objective;
}

TvmTrainResult TrainTvm(std::shared_ptr<const DiagonalGmm> ubm,
                        const std::vector<BwStats> &stats,
                        const TvmTrainOptions &options) {
  Require(!stats.empty(), ErrorKind::kInvalidArgument, "TVM training needs stats");
  Require(options.iters >= 0, ErrorKind::kInvalidArgument, "iters must be >= 0");
  TvmTrainResult result;
  result.model = InitTvModel(ubm, options.rank, options.seed, options.init_scale);
  const int r = options.rank, c = ubm->NumComponents(), d = ubm->Dim();
  for (int it = 0; it < options.iters; ++it) {
    TvmAccumulators acc = EStep(result.model, stats);
    result.objectives.push_back(acc.objective);
    Matrix t = result.model.t();
    for (int k = 0; k < c; ++k) {
      Matrix a = Eigen::Map<const Matrix>(acc.quad.col(k).data(), r, r);
      Eigen::LLT<Matrix> llt(a);
      if (llt.info() != Eigen::Success) continue;  // unused component
      Matrix ck = acc.linear.middleRows(static_cast<Eigen::Index>(k) * d, d);
      // T_c = C_c A_c^-1, A_c symmetric.
      t.middleRows(static_cast<Eigen::Index>(k) * d, d) =
          llt.solve(ck.transpose()).transpose();
    }
    result.model = TvModel(ubm, std::move(t));
  }
  result.objectives.push_back(EStep(result.model, stats).objective);
  return result;
}

int NumSegmentWindows(int num_frames, int win_frames, int hop_frames) {
  Require(num_frames >= 1 && win_frames >= 1 && hop_frames >= 1,
          ErrorKind::kInvalidArgument, "window arithmetic needs positive sizes");
  if (num_frames < win_frames) return 1;
  return (num_frames - win_frames) / hop_frames + 1;
}

std::vector<Vector> SegmentIvectors(const TvModel &model, const FeatureSequence &f,
                                    int win_frames, int hop_frames) {
  f.Validate();
  Require(f.Dim() == model.Dim(), ErrorKind::kDimensionMismatch,
          "feature dimension != UBM dimension");
  const int n = f.NumFrames();
  const int count = NumSegmentWindows(n, win_frames, hop_frames);
  const int win = std::min(win_frames, n);
  Matrix x = f.frames.cast<double>();
  Matrix post = model.ubm().Posteriors(x);
  std::vector<Vector> out(count);
  for (int s = 0; s < count; ++s) {
    int begin = s * hop_frames;
    std::vector<Eigen::Index> rows;
    for (int t = begin; t < begin + win; ++t)
      if (f.voiced[t]) rows.push_back(t);
    if (rows.empty()) {
      out[s] = Vector::Zero(model.Rank());
      continue;
    }
    Matrix xs = x(rows, Eigen::all), ps = post(rows, Eigen::all);
    out[s] = model.ExtractIvector(AccumulateStats(ps, xs, model.ubm()));
  }
  return out;
}

Matrix StackRows(const std::vector<Vector> &vs) {
  if (vs.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(vs.size()), vs.front().size());
  for (std::size_t i = 0; i < vs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = vs[i].transpose();
  return m;
}

}  // namespace relid
