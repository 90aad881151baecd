// core/src/bw-stats.cc

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

#include "relid/bw-stats.h"

#include <cmath>

#include "relid/binary-io.h"

namespace relid {

BwStats BwStats::Zero(int num_components, int dim) {
  BwStats s;
  s.n = Vector::Zero(num_components);
  s.f = Matrix::Zero(num_components, dim);
  return s;
}

namespace {
constexpr std::string_view kStatsMagic = "RBWS";
}  // namespace

void BwStats::Write(std::ostream &os) const {
  io::WriteMagic(os, kStatsMagic);
  io::WriteU32(os, static_cast<std::uint32_t>(NumComponents()));
  io::WriteU32(os, static_cast<std::uint32_t>(Dim()));
  io::WriteU64(os, static_cast<std::uint64_t>(frame_count));
  io::WriteF32Matrix(os, n.transpose());
  io::WriteF32Matrix(os, f);
}

BwStats BwStats::Read(std::istream &is) {
  io::ExpectMagic(is, kStatsMagic);
  std::uint32_t c = io::ReadU32(is), d = io::ReadU32(is);
  io::CheckDims(c, d, "stats");
  BwStats s;
  s.frame_count = static_cast<std::int64_t>(io::ReadU64(is));
  s.n = io::ReadF32Matrix(is, 1, c).row(0).transpose();
  s.f = io::ReadF32Matrix(is, c, d);
  Require(s.n.allFinite() && s.f.allFinite(), ErrorKind::kNumerical,
          "non-finite stats");
  return s;
}

void BwStats::Write(const std::string &path) const {
  auto os = io::OpenOut(path);
  Write(os);
}

BwStats BwStats::Read(const std::string &path) {
  auto is = io::OpenIn(path);
  return Read(is);
}

BwStats AccumulateStats(const Matrix &post, const Matrix &x,
                        const DiagonalGmm &ubm, std::span<const double> gamma) {
  Require(x.cols() == ubm.Dim(), ErrorKind::kDimensionMismatch,
          "frame dimension != UBM dimension");
  Require(post.rows() == x.rows() && post.cols() == ubm.NumComponents(),
          ErrorKind::kDimensionMismatch, "posterior matrix shape mismatch");
  BwStats s = BwStats::Zero(ubm.NumComponents(), ubm.Dim());
  s.frame_count = x.rows();
  if (x.rows() == 0) return s;
  if (gamma.empty()) {
    s.n = post.colwise().sum().transpose();
    s.f = post.transpose() * x;
  } else {
    Require(static_cast<Eigen::Index>(gamma.size()) == x.rows(),
            ErrorKind::kDimensionMismatch,
            "gamma length " + std::to_string(gamma.size()) +
                " != voiced frame count " + std::to_string(x.rows()));
    Eigen::Map<const Vector> g(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
    Require((g.array() >= 0.0).all() && (g.array() <= 1.0).all(),
            ErrorKind::kInvalidArgument, "gamma must lie in [0, 1]");
    Matrix weighted = g.asDiagonal() * post;
    s.n = weighted.colwise().sum().transpose();
    s.f = weighted.transpose() * x;
  }
  s.f -= s.n.asDiagonal() * ubm.means();
  return s;
}

BwStats AccumulateStats(const DiagonalGmm &ubm, const Matrix &x,
                        std::span<const double> gamma) {
  Require(x.cols() == ubm.Dim(), ErrorKind::kDimensionMismatch,
          "frame dimension != UBM dimension");
  Require(x.allFinite(), ErrorKind::kNumerical, "non-finite features");
  if (x.rows() == 0) {
    Require(gamma.empty(), ErrorKind::kDimensionMismatch,
            "gamma given for zero frames");
    return BwStats::Zero(ubm.NumComponents(), ubm.Dim());
  }
  return AccumulateStats(ubm.Posteriors(x), x, ubm, gamma);
}

BwStats AccumulateStats(const DiagonalGmm &ubm, const FeatureSequence &f,
                        std::span<const double> gamma) {
  f.Validate();
  return AccumulateStats(ubm, VoicedFrames(f), gamma);
}

double Entropy(std::span<const double> p) {
  Require(!p.empty(), ErrorKind::kInvalidArgument, "entropy of empty vector");
  double sum = 0.0, h = 0.0;
  for (double v : p) {
    Require(v >= 0.0 && std::isfinite(v), ErrorKind::kInvalidArgument,
            "probabilities must be finite and non-negative");
    sum += v;
    if (v > 0.0) h -= v * std::log(v);
  }
  Require(std::abs(sum - 1.0) <= 1e-6, ErrorKind::kInvalidArgument,
          "probabilities do not sum to 1");
  return std::max(0.0, h);
}

double Entropy(const Vector &p) {
  return Entropy(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

GammaConfig GammaConfig::Default(int num_languages) {
  Require(num_languages >= 2, ErrorKind::kInvalidArgument,
          "need at least 2 languages");
  double ln_l = std::log(static_cast<double>(num_languages));
  return GammaConfig{0.2 * ln_l, 0.9 * ln_l, 100};
}

void GammaConfig::Validate(int num_languages) const {
  Require(h_min >= 0.0 && h_min < h_max, ErrorKind::kInvalidArgument,
          "gamma config needs 0 <= h_min < h_max");
  Require(block_frames >= 1, ErrorKind::kInvalidArgument,
          "block_frames must be positive");
  if (num_languages > 0)
    Require(h_max <= std::log(static_cast<double>(num_languages)) + 1e-12,
            ErrorKind::kInvalidArgument, "h_max exceeds ln L");
}

double GammaFromEntropy(double h, const GammaConfig &cfg) {
  cfg.Validate();
  Require(h >= 0.0 && std::isfinite(h), ErrorKind::kInvalidArgument,
          "entropy must be finite and non-negative");
  if (h < cfg.h_min) return 1.0;
  if (h > cfg.h_max) return 0.0;
  return (cfg.h_max - h) / (cfg.h_max - cfg.h_min);
}

std::vector<std::pair<int, int>> RelevanceBlocks(int num_frames, int block_frames) {
  Require(num_frames >= 1 && block_frames >= 1, ErrorKind::kInvalidArgument,
          "blocks need positive sizes");
  std::vector<std::pair<int, int>> blocks;
  for (int b = 0; b < num_frames; b += block_frames)
    blocks.emplace_back(b, std::min(block_frames, num_frames - b));
  if (blocks.size() >= 2 && 2 * blocks.back().second < block_frames) {
    int tail = blocks.back().second;
    blocks.pop_back();
    blocks.back().second += tail;
  }
  return blocks;
}

std::vector<double> RelevanceWeights(const BlockPosteriorFn &posterior_fn,
                                     const FeatureSequence &f,
                                     const GammaConfig &cfg) {
  f.Validate();
  cfg.Validate();
  std::vector<double> gamma;
  gamma.reserve(f.NumVoiced());
  // Scoring uses whole blocks only; a merged tail keeps its block's value.
  for (auto [begin, len] : RelevanceBlocks(f.NumFrames(), cfg.block_frames)) {
    int scored = std::min(len, cfg.block_frames);
    Vector post = posterior_fn(f.Slice(begin, scored));
    double g = GammaFromEntropy(Entropy(post), cfg);
    for (int t = begin; t < begin + len; ++t)
      if (f.voiced[t]) gamma.push_back(g);
  }
  return gamma;
}

std::vector<double> InverseEntropyWeights(const std::vector<double> &entropies) {
  Require(!entropies.empty(), ErrorKind::kInvalidArgument,
          "fusion needs at least one member");
  int zero_count = 0;
  for (double h : entropies) {
    Require(h >= 0.0 && std::isfinite(h), ErrorKind::kInvalidArgument,
            "entropies must be finite and non-negative");
    if (h == 0.0) ++zero_count;
  }
  std::vector<double> w(entropies.size());
  if (zero_count > 0) {
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] = entropies[k] == 0.0 ? 1.0 / zero_count : 0.0;
    return w;
  }
  double z = 0.0;
  for (double h : entropies) z += 1.0 / h;
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = (1.0 / entropies[k]) / z;
  return w;
}

FusionResult InverseEntropyFuse(const std::vector<Vector> &posteriors) {
  Require(!posteriors.empty(), ErrorKind::kInvalidArgument,
          "fusion needs at least one posterior");
  const Eigen::Index l = posteriors.front().size();
  std::vector<double> h(posteriors.size());
  for (std::size_t k = 0; k < posteriors.size(); ++k) {
    Require(posteriors[k].size() == l, ErrorKind::kDimensionMismatch,
            "posteriors differ in length");
    h[k] = Entropy(posteriors[k]);
  }
  FusionResult r;
  r.weights = InverseEntropyWeights(h);
  r.fused = Vector::Zero(l);
  for (std::size_t k = 0; k < posteriors.size(); ++k)
    r.fused += r.weights[k] * posteriors[k];
  r.fused.maxCoeff(&r.label);
  return r;
}

}  // namespace relid
