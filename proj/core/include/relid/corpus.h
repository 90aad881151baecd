// core/include/relid/corpus.h

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

#ifndef RELID_CORPUS_H_
#define RELID_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "relid/common.h"

namespace relid {

// T x D frame features with a frame hop and a voicing mask.
struct FeatureSequence {
  FeatureMatrix frames;
  int hop_ms = 10;
  std::vector<std::uint8_t> voiced;

  static FeatureSequence FromFrames(FeatureMatrix frames, int hop_ms = 10);

  int NumFrames() const { return static_cast<int>(frames.rows()); }
  int Dim() const { return static_cast<int>(frames.cols()); }
  int NumVoiced() const;
  // Throws unless T >= 1, every entry is finite and voiced has length T.
  void Validate() const;
  // Frames [begin, begin + count) with their voicing.
  FeatureSequence Slice(int begin, int count) const;
};

struct Utterance {
  std::string id;
  int language = -1;  // -1 when unlabeled
  FeatureSequence features;
  // Per-frame SNR in dB; kCleanSnrDb on clean frames. Empty for external data.
  std::vector<float> snr_trace;

  Utterance Slice(int begin, int count) const;
};

enum class NoiseMode { kClean, kFull, kPartial };

NoiseMode ParseNoiseMode(const std::string &name);
std::string NoiseModeName(NoiseMode mode);

struct CorpusConfig {
  int num_languages = 3;
  int utts_per_language = 40;
  double min_duration_s = 10.0;
  double max_duration_s = 10.0;
  int dim = 20;
  int source_components = 16;
  NoiseMode noise = NoiseMode::kClean;
  double snr_db = 10.0;
  std::uint64_t seed = 1;
  // Utterance ids are "<id_prefix>-l<lang>-<index>". Different prefixes with
  // the same seed give disjoint utterances from the same language sources.
  std::string id_prefix = "utt";

  // Generator shape. Languages share a phone-like component inventory and
  // differ by small mean offsets and by component usage.
  double component_spread = 2.0;
  double language_separation = 0.35;
  double weight_contrast = 0.5;
  double session_std = 0.4;
  double mean_dwell_frames = 6.0;
  double pause_probability = 0.01;

  void Validate() const;
};

// Per-language frame source (diagonal GMM).
struct LanguageSource {
  Vector weights;
  Matrix means;      // K x D
  Matrix variances;  // K x D
};

std::vector<LanguageSource> MakeLanguageSources(const CorpusConfig &config);

// Deterministic in the config; utterance i of language l draws from its own
// RNG stream seeded by seed ^ hash(id), so generation order is irrelevant.
std::vector<Utterance> GenerateCorpus(const CorpusConfig &config);

// Adds zero-mean Gaussian noise to frames [begin, end) scaled so that the
// utterance's speech variance (mean per-dim variance of the frames before
// noise) over the noise variance equals snr_db. The realized per-frame SNR,
// 10 log10(D * speech_var / |n_t|^2), is written to snr_trace.
void AddNoise(Utterance &utt, double snr_db, int begin, int end,
              std::uint64_t seed);

// Voiced mask: frame energy |x_t|^2 strictly above the k-th smallest energy,
// k = ceil(q T) - 1 (q = 0 keeps every frame). Frames are unchanged.
FeatureSequence ApplySad(const FeatureSequence &f, double energy_quantile);

inline constexpr double kCmvnVarianceFloor = 1e-8;

// Stage 1: per-utterance mean and variance normalization over voiced frames.
FeatureSequence CmvnUtterance(const FeatureSequence &f);
// Stage 2: each frame re-normalized by voiced-frame statistics of the
// centered window [t - W/2, t - W/2 + W - 1] clipped to the utterance,
// W = window_s / hop.
FeatureSequence CmvnSliding(const FeatureSequence &f, double window_s);
// Both stages.
FeatureSequence Cmvn(const FeatureSequence &f, double window_s = 3.0);

// Window of frames whose statistics normalize frame t in CmvnSliding.
std::pair<int, int> CmvnWindow(int t, int num_frames, int window_frames);

// RLID feature files. The utterance id is not stored; ReadFeatures takes it
// from the file name stem.
void WriteFeatures(const Utterance &utt, const std::string &path);
Utterance ReadFeatures(const std::string &path);
void WriteFeatures(const Utterance &utt, std::ostream &os);
Utterance ReadFeatures(std::istream &is, const std::string &id);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  int label = -1;
};

void WriteManifest(const std::string &path,
                   const std::vector<ManifestEntry> &entries);
std::vector<ManifestEntry> ReadManifest(const std::string &path);
// Loads every utterance listed in a manifest.
std::vector<Utterance> LoadManifest(const std::string &path);

}  // namespace relid

#endif  // RELID_CORPUS_H_
