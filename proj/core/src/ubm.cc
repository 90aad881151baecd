// core/src/ubm.cc

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

#include "relid/ubm.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "relid/binary-io.h"
#include "relid/parallel.h"

namespace relid {

DiagonalGmm::DiagonalGmm(Vector weights, Matrix means, Matrix variances)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      variances_(std::move(variances)) {
  Require(weights_.size() >= 1, ErrorKind::kInvalidArgument,
          "GMM needs at least one component");
  Require(means_.rows() == weights_.size() && variances_.rows() == weights_.size() &&
              means_.cols() == variances_.cols() && means_.cols() >= 1,
          ErrorKind::kDimensionMismatch, "GMM parameter shapes disagree");
  Require(std::abs(weights_.sum() - 1.0) < 1e-6 && (weights_.array() > 0).all(),
          ErrorKind::kInvalidArgument, "GMM weights must be positive and sum to 1");
  Require(means_.allFinite() && variances_.allFinite(), ErrorKind::kNumerical,
          "non-finite GMM parameters");
  // Renormalize in double so the 1e-9 invariant holds after f32 round trips.
  weights_ /= weights_.sum();
  variances_ = variances_.cwiseMax(kGmmVarianceFloor);
  Precompute();
}

void DiagonalGmm::Precompute() {
  inv_vars_ = variances_.cwiseInverse();
  means_invvars_ = means_.cwiseProduct(inv_vars_);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  gconst_.resize(NumComponents());
  for (int c = 0; c < NumComponents(); ++c)
    gconst_(c) = std::log(weights_(c)) -
                 0.5 * (Dim() * log2pi + variances_.row(c).array().log().sum() +
                        means_.row(c).cwiseProduct(means_invvars_.row(c)).sum());
}

Matrix DiagonalGmm::ComponentLogLikes(const Matrix &x) const {
  Require(x.cols() == Dim(), ErrorKind::kDimensionMismatch,
          "frame dimension " + std::to_string(x.cols()) + " != GMM dimension " +
              std::to_string(Dim()));
  Matrix ll = x * means_invvars_.transpose() -
              0.5 * x.array().square().matrix() * inv_vars_.transpose();
  ll.rowwise() += gconst_.transpose();
  return ll;
}

namespace {

// Row-wise log-sum-exp.
Vector LogSumExpRows(const Matrix &m) {
  Vector out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double mx = m.row(i).maxCoeff();
    out(i) = mx + std::log((m.row(i).array() - mx).exp().sum());
  }
  return out;
}

}  // namespace

Matrix DiagonalGmm::Posteriors(const Matrix &x) const {
  // One exp per entry; frames are columns so each softmax is contiguous.
  Matrix post = ComponentLogLikes(x).transpose();
  for (Eigen::Index t = 0; t < post.cols(); ++t) {
    auto col = post.col(t);
    col = (col.array() - col.maxCoeff()).exp().matrix();
    col /= col.sum();
  }
  return post.transpose();
}

Vector DiagonalGmm::Posteriors(const Vector &x) const {
  return Posteriors(Matrix(x.transpose())).row(0).transpose();
}

double DiagonalGmm::LogLikelihood(const Matrix &x) const {
  Require(x.rows() >= 1, ErrorKind::kInvalidArgument, "no frames");
  return LogSumExpRows(ComponentLogLikes(x)).sum();
}

namespace {
constexpr std::string_view kGmmMagic = "RGMM";
constexpr std::uint16_t kGmmVersion = 1;
}  // namespace

void DiagonalGmm::Write(std::ostream &os) const {
  io::WriteMagic(os, kGmmMagic);
  io::WriteU16(os, kGmmVersion);
  io::WriteU32(os, static_cast<std::uint32_t>(NumComponents()));
  io::WriteU32(os, static_cast<std::uint32_t>(Dim()));
  io::WriteF32Matrix(os, weights_.transpose());
  io::WriteF32Matrix(os, means_);
  io::WriteF32Matrix(os, variances_);
}

DiagonalGmm DiagonalGmm::Read(std::istream &is) {
  io::ExpectMagic(is, kGmmMagic);
  if (io::ReadU16(is) != kGmmVersion)
    Fail(ErrorKind::kFormat, "unsupported GMM version");
  std::uint32_t c = io::ReadU32(is), d = io::ReadU32(is);
  io::CheckDims(c, d, "GMM");
  Matrix w = io::ReadF32Matrix(is, 1, c);
  Matrix means = io::ReadF32Matrix(is, c, d);
  Matrix vars = io::ReadF32Matrix(is, c, d);
  return DiagonalGmm(w.row(0).transpose(), std::move(means), std::move(vars));
}

void DiagonalGmm::Write(const std::string &path) const {
  auto os = io::OpenOut(path);
  Write(os);
}

DiagonalGmm DiagonalGmm::Read(const std::string &path) {
  auto is = io::OpenIn(path);
  return Read(is);
}

std::uint64_t DiagonalGmm::Hash() const {
  std::ostringstream ss;
  Write(ss);
  return io::Fnv1a(ss.str());
}

namespace {

struct EmAccumulators {
  Vector occ;
  Matrix first, second;
  double log_like = 0.0;
};

constexpr Eigen::Index kShardRows = 4096;

// E-step over fixed shards, summed in shard order.
EmAccumulators Accumulate(const DiagonalGmm &gmm, const Matrix &x) {
  const Eigen::Index n = x.rows();
  const std::size_t shards = static_cast<std::size_t>((n + kShardRows - 1) / kShardRows);
  std::vector<EmAccumulators> parts(shards);
  ParallelFor(shards, [&](std::size_t s) {
    Eigen::Index b = static_cast<Eigen::Index>(s) * kShardRows;
    Eigen::Index len = std::min(kShardRows, n - b);
    auto xs = x.middleRows(b, len);
    Matrix ll = gmm.ComponentLogLikes(xs);
    Vector norm = LogSumExpRows(ll);
    Matrix post = (ll.colwise() - norm).array().exp().matrix();
    EmAccumulators &a = parts[s];
    a.occ = post.colwise().sum().transpose();
    a.first = post.transpose() * xs;
    a.second = post.transpose() * xs.array().square().matrix();
    a.log_like = norm.sum();
  });
  EmAccumulators total = std::move(parts[0]);
  for (std::size_t s = 1; s < shards; ++s) {
    total.occ += parts[s].occ;
    total.first += parts[s].first;
    total.second += parts[s].second;
    total.log_like += parts[s].log_like;
  }
  return total;
}

DiagonalGmm MaximizationStep(const EmAccumulators &acc, const DiagonalGmm &prev) {
  const int c = prev.NumComponents();
  Vector weights(c);
  Matrix means = prev.means(), vars = prev.variances();
  double total = acc.occ.sum();
  for (int k = 0; k < c; ++k) {
    double occ = acc.occ(k);
    weights(k) = std::max(occ / total, kGmmWeightFloor);
    if (occ < 1e-10) continue;  // keep previous parameters for empty components
    means.row(k) = acc.first.row(k) / occ;
    vars.row(k) = (acc.second.row(k) / occ -
                   means.row(k).array().square().matrix())
                      .cwiseMax(kGmmVarianceFloor);
  }
  weights /= weights.sum();
  return DiagonalGmm(std::move(weights), std::move(means), std::move(vars));
}

// Splits the heaviest components until the model has `target` components.
DiagonalGmm Split(const DiagonalGmm &gmm, int target) {
  const int c = gmm.NumComponents(), d = gmm.Dim();
  int add = std::min(c, target - c);
  std::vector<int> order(c);
  for (int k = 0; k < c; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return gmm.weights()(a) > gmm.weights()(b);
  });
  Vector w(c + add);
  Matrix means(c + add, d), vars(c + add, d);
  w.head(c) = gmm.weights();
  means.topRows(c) = gmm.means();
  vars.topRows(c) = gmm.variances();
  for (int i = 0; i < add; ++i) {
    int k = order[i];
    RowVector offset = 0.1 * gmm.variances().row(k).cwiseSqrt();
    means.row(c + i) = gmm.means().row(k) + offset;
    means.row(k) = gmm.means().row(k) - offset;
    vars.row(c + i) = gmm.variances().row(k);
    w(k) = gmm.weights()(k) / 2;
    w(c + i) = gmm.weights()(k) / 2;
  }
  return DiagonalGmm(std::move(w), std::move(means), std::move(vars));
}

}  // namespace

UbmTrainResult TrainUbm(const Matrix &frames, const UbmTrainOptions &options) {
  Require(options.num_components >= 1 && options.iters >= 1,
          ErrorKind::kInvalidArgument, "UBM needs C >= 1 and iters >= 1");
  Require(frames.rows() >= options.num_components, ErrorKind::kInvalidArgument,
          "fewer frames (" + std::to_string(frames.rows()) +
              ") than components (" + std::to_string(options.num_components) + ")");
  Require(frames.cols() >= 1, ErrorKind::kInvalidArgument, "zero-dim frames");
  Require(frames.allFinite(), ErrorKind::kNumerical, "non-finite features");

  const double n = static_cast<double>(frames.rows());
  RowVector mean = frames.colwise().mean();
  RowVector var = ((frames.array().square().colwise().sum() / n).matrix() -
                   mean.array().square().matrix())
                      .cwiseMax(kGmmVarianceFloor);
  DiagonalGmm gmm(Vector::Ones(1), Matrix(mean), Matrix(var));

  // A small deterministic jitter breaks ties between split twins that would
  // otherwise be symmetric about the parent mean.
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> jitter(0.0, 1e-3);
  while (gmm.NumComponents() < options.num_components) {
    gmm = Split(gmm, std::min(options.num_components, 2 * gmm.NumComponents()));
    Matrix means = gmm.means();
    for (Eigen::Index i = 0; i < means.size(); ++i)
      means.data()[i] += jitter(rng) * std::sqrt(gmm.variances().data()[i]);
    gmm = DiagonalGmm(gmm.weights(), std::move(means), gmm.variances());
    if (gmm.NumComponents() < options.num_components)
      for (int it = 0; it < options.split_iters; ++it)
        gmm = MaximizationStep(Accumulate(gmm, frames), gmm);
  }

  UbmTrainResult result;
  for (int it = 0; it < options.iters; ++it) {
    EmAccumulators acc = Accumulate(gmm, frames);
    result.log_likelihoods.push_back(acc.log_like);
    gmm = MaximizationStep(acc, gmm);
  }
  result.log_likelihoods.push_back(Accumulate(gmm, frames).log_like);
  result.gmm = std::move(gmm);
  return result;
}

Matrix VoicedFrames(const FeatureSequence &f) {
  Matrix out(f.NumVoiced(), f.Dim());
  Eigen::Index r = 0;
  for (int t = 0; t < f.NumFrames(); ++t)
    if (f.voiced[t]) out.row(r++) = f.frames.row(t).cast<double>();
  return out;
}

Matrix PoolVoicedFrames(const std::vector<Utterance> &utts, int stride) {
  Require(stride >= 1, ErrorKind::kInvalidArgument, "stride must be >= 1");
  Require(!utts.empty(), ErrorKind::kInvalidArgument, "no utterances to pool");
  const int d = utts.front().features.Dim();
  Eigen::Index total = 0;
  for (const auto &u : utts) {
    Require(u.features.Dim() == d, ErrorKind::kDimensionMismatch,
            "utterance " + u.id + " has a different feature dimension");
    total += (u.features.NumVoiced() + stride - 1) / stride;
  }
  Matrix out(total, d);
  Eigen::Index r = 0;
  for (const auto &u : utts) {
    int seen = 0;
    for (int t = 0; t < u.features.NumFrames(); ++t) {
      if (!u.features.voiced[t]) continue;
      if (seen++ % stride == 0) out.row(r++) = u.features.frames.row(t).cast<double>();
    }
  }
  return out;
}

}  // namespace relid
