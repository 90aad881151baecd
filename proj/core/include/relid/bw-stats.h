// core/include/relid/bw-stats.h

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

#ifndef RELID_BW_STATS_H_
#define RELID_BW_STATS_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relid/common.h"
#include "relid/corpus.h"
#include "relid/ubm.h"

namespace relid {

// Zeroth- and first-order Baum-Welch statistics of one recording (or one
// segment). The first-order term is centered on the UBM means.
struct BwStats {
  Vector n;                       // C
  Matrix f;                       // C x D
  std::int64_t frame_count = 0;   // frames that entered the sums

  int NumComponents() const { return static_cast<int>(n.size()); }
  int Dim() const { return static_cast<int>(f.cols()); }
  static BwStats Zero(int num_components, int dim);

  void Write(std::ostream &os) const;
  static BwStats Read(std::istream &is);
  void Write(const std::string &path) const;
  static BwStats Read(const std::string &path);
};

// N_c = sum_i gamma_i p(c|x_i),  F_c = sum_i gamma_i p(c|x_i) (x_i - mu_c)
// over the voiced frames of f. An empty gamma means gamma_i = 1; otherwise it
// has one entry in [0, 1] per voiced frame.
BwStats AccumulateStats(const DiagonalGmm &ubm, const FeatureSequence &f,
                        std::span<const double> gamma = {});
// Same over explicit frames (rows of x), all of which contribute.
BwStats AccumulateStats(const DiagonalGmm &ubm, const Matrix &x,
                        std::span<const double> gamma = {});
// Same with precomputed frame posteriors (rows of post align with x).
BwStats AccumulateStats(const Matrix &post, const Matrix &x,
                        const DiagonalGmm &ubm, std::span<const double> gamma = {});

// Shannon entropy in nats, with 0 ln 0 = 0. p must sum to 1 within 1e-6.
double Entropy(std::span<const double> p);
double Entropy(const Vector &p);

struct GammaConfig {
  double h_min = 0.0;
  double h_max = 1.0;
  int block_frames = 100;

  // h_min = 0.2 ln L, h_max = 0.9 ln L.
  static GammaConfig Default(int num_languages);
  // 0 <= h_min < h_max, block_frames >= 1; with L > 0 also h_max <= ln L.
  void Validate(int num_languages = 0) const;
};

// Piecewise-linear relevance: 1 below h_min, 0 above h_max, linear between.
double GammaFromEntropy(double h, const GammaConfig &cfg);

// Non-overlapping blocks [begin, begin + len) covering num_frames frames.
// A trailing block shorter than half a block is merged into the previous
// one (it inherits that block's relevance).
std::vector<std::pair<int, int>> RelevanceBlocks(int num_frames, int block_frames);

// Maps a block of frames to a language posterior (L-vector).
using BlockPosteriorFn = std::function<Vector(const FeatureSequence &block)>;

// Per-voiced-frame relevance gamma: each block's posterior entropy mapped
// through GammaFromEntropy and broadcast to the block's voiced frames.
std::vector<double> RelevanceWeights(const BlockPosteriorFn &posterior_fn,
                                     const FeatureSequence &f,
                                     const GammaConfig &cfg);

struct FusionResult {
  Vector fused;
  int label = 0;
  std::vector<double> weights;
};

// w_k proportional to 1 / H_k. Members with zero entropy share all of the
// weight equally.
std::vector<double> InverseEntropyWeights(const std::vector<double> &entropies);

// Posteriors combined with InverseEntropyWeights of their entropies.
FusionResult InverseEntropyFuse(const std::vector<Vector> &posteriors);

}  // namespace relid

#endif  // RELID_BW_STATS_H_
