// core/include/relid/pipeline.h

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

#ifndef RELID_PIPELINE_H_
#define RELID_PIPELINE_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relid/backend.h"
#include "relid/bw-stats.h"
#include "relid/corpus.h"
#include "relid/eval.h"
#include "relid/models.h"
#include "relid/training.h"
#include "relid/tvm.h"

namespace relid {

struct FrontendOptions {
  double sad_quantile = 0.1;
  double cmvn_window_s = 3.0;
};

// SAD mask then two-stage CMVN.
FeatureSequence Frontend(const FeatureSequence &f, const FrontendOptions &options);
std::vector<Utterance> PreprocessCorpus(const std::vector<Utterance> &utts,
                                        const FrontendOptions &options);

struct AugmentOptions {
  // Fraction of the utterance covered by the noisy region.
  double min_fraction = 0.3;
  double max_fraction = 0.7;
  std::vector<double> snrs_db = {5.0, 10.0, 15.0, 20.0};
  // The utterance is cut into this many equal slots and each slot gets one
  // noisy run of the drawn fraction at a random offset.
  int regions = 1;
  // Noisy copies per utterance, each with its own draw.
  int copies = 1;
  std::uint64_t seed = 1;
};

// `copies` noisy copies of each utterance, copy-major: `regions` random
// contiguous runs receive noise at an SNR drawn from snrs_db. The first copy
// gets the id suffix "-aug", later ones "-aug2", "-aug3", ...
std::vector<Utterance> AugmentWithNoise(const std::vector<Utterance> &utts,
                                        const AugmentOptions &options);

std::vector<std::string> DefaultLanguageNames(int num_languages);
std::vector<int> Labels(const std::vector<Utterance> &utts);

// i-vector from (optionally gamma-weighted) stats over the voiced frames.
Vector UtteranceIvector(const TvModel &tvm, const FeatureSequence &f,
                        std::span<const double> gamma = {});
std::vector<Vector> UtteranceIvectors(const TvModel &tvm, const std::vector<Utterance> &utts);
// Segment i-vector sequence of every utterance (rows = windows).
std::vector<Matrix> SegmentIvectorSequences(const TvModel &tvm,
                                            const std::vector<Utterance> &utts,
                                            int win_frames = 100, int hop_frames = 20);

// Entropy DNN examples: every `stride`-th row of each sequence, labeled with
// its utterance's language.
std::vector<Example> SegmentExamples(const std::vector<Matrix> &sequences,
                                     const std::vector<int> &labels, int stride);

// Block posterior for relevance weighting: i-vector of the block's voiced
// frames scored by the entropy DNN.
BlockPosteriorFn EntropyDnnPosteriorFn(const TvModel &tvm, const Model &dnn);

struct RwbwResult {
  Vector ivector;
  std::vector<double> gamma;  // per voiced frame, as used
  bool fell_back = false;     // every block had gamma 0; unit weights used
};

RwbwResult RwbwIvector(const TvModel &tvm, const Model &dnn, const FeatureSequence &f,
                       const GammaConfig &cfg);
std::vector<RwbwResult> RwbwIvectors(const TvModel &tvm, const Model &dnn,
                                     const std::vector<Utterance> &utts,
                                     const GammaConfig &cfg);

// Scores are flat-prior LLRs of the posteriors.
ScoreSet BackendScoreSet(const Backend &backend, const std::vector<Vector> &vectors,
                         const std::vector<Utterance> &utts,
                         const std::vector<std::string> &languages);
ScoreSet ModelScoreSet(const Model &model, const std::vector<Matrix> &inputs,
                       const std::vector<Utterance> &utts,
                       const std::vector<std::string> &languages);

// Frame range [begin, end) summarized by each attention position of a
// model over an utterance of num_frames frames.
std::vector<std::pair<int, int>> AttentionFrameRanges(const ModelConfig &config,
                                                      int num_frames);

struct AttentionRow {
  int position = 0;
  double weight = 0.0;
  double mean_snr_db = kCleanSnrDb;
};

// One row per attention position with the mean SNR of its frames
// (kCleanSnrDb when the utterance has no SNR trace).
std::vector<AttentionRow> AttentionSnrRows(const std::vector<double> &attention,
                                           const std::vector<std::pair<int, int>> &ranges,
                                           const Utterance &utt);

struct AttentionSplit {
  double clean_mean = 0.0;  // mean weight over positions with only clean frames
  double noisy_mean = 0.0;  // mean weight over positions with only noisy frames
  int clean_positions = 0;
  int noisy_positions = 0;
};

AttentionSplit SplitAttentionByNoise(const std::vector<double> &attention,
                                     const std::vector<std::pair<int, int>> &ranges,
                                     const Utterance &utt);

// "REMB" archive: count, then per entry id, label (i16), rows, cols and
// little-endian float32 values.
struct EmbeddingEntry {
  std::string id;
  int label = -1;
  Matrix value;
};

void WriteEmbeddings(const std::string &path, const std::vector<EmbeddingEntry> &entries);
std::vector<EmbeddingEntry> ReadEmbeddings(const std::string &path);

}  // namespace relid

#endif  // RELID_PIPELINE_H_
