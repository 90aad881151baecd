// core/src/pipeline.cc

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

#include "relid/pipeline.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "relid/binary-io.h"
#include "relid/parallel.h"

namespace relid {

FeatureSequence Frontend(const FeatureSequence &f, const FrontendOptions &options) {
  return Cmvn(ApplySad(f, options.sad_quantile), options.cmvn_window_s);
}

std::vector<Utterance> PreprocessCorpus(const std::vector<Utterance> &utts,
                                        const FrontendOptions &options) {
  std::vector<Utterance> out(utts.size());
  ParallelFor(utts.size(), [&](std::size_t i) {
    out[i] = utts[i];
    out[i].features = Frontend(utts[i].features, options);
  });
  return out;
}

std::vector<Utterance> AugmentWithNoise(const std::vector<Utterance> &utts,
                                        const AugmentOptions &options) {
  Require(!options.snrs_db.empty(), ErrorKind::kInvalidArgument, "no augmentation SNRs");
  Require(0 < options.min_fraction && options.min_fraction <= options.max_fraction &&
              options.max_fraction <= 1.0,
          ErrorKind::kInvalidArgument, "bad augmentation region fractions");
  Require(options.regions >= 1, ErrorKind::kInvalidArgument, "augment regions must be >= 1");
  Require(options.copies >= 1, ErrorKind::kInvalidArgument, "augment copies must be >= 1");
  std::vector<Utterance> out(utts.size() * options.copies);
  ParallelFor(out.size(), [&](std::size_t i) {
    const std::size_t copy = i / utts.size();
    Utterance u = utts[i % utts.size()];
    u.id += copy == 0 ? std::string("-aug") : "-aug" + std::to_string(copy + 1);
    std::mt19937_64 rng(options.seed ^ io::Fnv1a(u.id));
    const int n = u.features.NumFrames();
    double frac = std::uniform_real_distribution<double>(options.min_fraction,
                                                         options.max_fraction)(rng);
    double snr = options.snrs_db[std::uniform_int_distribution<std::size_t>(
        0, options.snrs_db.size() - 1)(rng)];
    const int slots = std::min(options.regions, n);
    // Every run is scaled against the clean utterance.
    const Utterance clean = u;
    for (int k = 0; k < slots; ++k) {
      int slot_begin = static_cast<int>(static_cast<long>(n) * k / slots);
      int slot_end = static_cast<int>(static_cast<long>(n) * (k + 1) / slots);
      int slot = slot_end - slot_begin;
      int len = std::clamp(static_cast<int>(std::lround(frac * slot)), 1, slot);
      int begin = slot_begin + std::uniform_int_distribution<int>(0, slot - len)(rng);
      Utterance noisy = clean;
      AddNoise(noisy, snr, begin, begin + len, rng());
      u.features.frames.middleRows(begin, len) = noisy.features.frames.middleRows(begin, len);
      if (u.snr_trace.empty()) u.snr_trace.assign(n, static_cast<float>(kCleanSnrDb));
      std::copy(noisy.snr_trace.begin() + begin, noisy.snr_trace.begin() + begin + len,
                u.snr_trace.begin() + begin);
    }
    out[i] = std::move(u);
  });
  return out;
}

std::vector<std::string> DefaultLanguageNames(int num_languages) {
  std::vector<std::string> names;
  for (int l = 0; l < num_languages; ++l) names.push_back("lang" + std::to_string(l));
  return names;
}

std::vector<int> Labels(const std::vector<Utterance> &utts) {
  std::vector<int> labels;
  labels.reserve(utts.size());
  for (const auto &u : utts) labels.push_back(u.language);
  return labels;
}

Vector UtteranceIvector(const TvModel &tvm, const FeatureSequence &f,
                        std::span<const double> gamma) {
  return tvm.ExtractIvector(AccumulateStats(tvm.ubm(), f, gamma));
}

std::vector<Vector> UtteranceIvectors(const TvModel &tvm, const std::vector<Utterance> &utts) {
  std::vector<Vector> out(utts.size());
  ParallelFor(utts.size(), [&](std::size_t i) { out[i] = UtteranceIvector(tvm, utts[i].features); });
  return out;
}

std::vector<Matrix> SegmentIvectorSequences(const TvModel &tvm,
                                            const std::vector<Utterance> &utts,
                                            int win_frames, int hop_frames) {
  std::vector<Matrix> out(utts.size());
  ParallelFor(utts.size(), [&](std::size_t i) {
    out[i] = StackRows(SegmentIvectors(tvm, utts[i].features, win_frames, hop_frames));
  });
  return out;
}

std::vector<Example> SegmentExamples(const std::vector<Matrix> &sequences,
                                     const std::vector<int> &labels, int stride) {
  Require(sequences.size() == labels.size(), ErrorKind::kDimensionMismatch,
          "sequence and label counts differ");
  Require(stride >= 1, ErrorKind::kInvalidArgument, "stride must be positive");
  std::vector<Example> out;
  for (std::size_t i = 0; i < sequences.size(); ++i)
    for (Eigen::Index r = 0; r < sequences[i].rows(); r += stride)
      out.push_back({sequences[i].row(r), labels[i]});
  return out;
}

BlockPosteriorFn EntropyDnnPosteriorFn(const TvModel &tvm, const Model &dnn) {
  Require(dnn.config().architecture == Architecture::kEntropyDnn &&
              dnn.config().input_dim == tvm.Rank(),
          ErrorKind::kDimensionMismatch, "entropy DNN does not match the i-vector rank");
  return [&tvm, &dnn](const FeatureSequence &block) -> Vector {
    Vector y = UtteranceIvector(tvm, block);
    return dnn.Predict(y.transpose()).posteriors;
  };
}

RwbwResult RwbwIvector(const TvModel &tvm, const Model &dnn, const FeatureSequence &f,
                       const GammaConfig &cfg) {
  RwbwResult r;
  r.gamma = RelevanceWeights(EntropyDnnPosteriorFn(tvm, dnn), f, cfg);
  bool any = std::any_of(r.gamma.begin(), r.gamma.end(), [](double g) { return g > 0.0; });
  if (!any) {
    r.fell_back = true;
    std::fill(r.gamma.begin(), r.gamma.end(), 1.0);
  }
  r.ivector = UtteranceIvector(tvm, f, r.gamma);
  return r;
}

std::vector<RwbwResult> RwbwIvectors(const TvModel &tvm, const Model &dnn,
                                     const std::vector<Utterance> &utts,
                                     const GammaConfig &cfg) {
  std::vector<RwbwResult> out(utts.size());
  ParallelFor(utts.size(),
              [&](std::size_t i) { out[i] = RwbwIvector(tvm, dnn, utts[i].features, cfg); });
  return out;
}

namespace {

ScoreSet EmptyScoreSet(const std::vector<Utterance> &utts,
                       const std::vector<std::string> &languages) {
  ScoreSet s;
  s.scores.resize(static_cast<Eigen::Index>(utts.size()),
                  static_cast<Eigen::Index>(languages.size()));
  s.labels = Labels(utts);
  s.languages = languages;
  for (const auto &u : utts) s.trial_ids.push_back(u.id);
  return s;
}

}  // namespace

ScoreSet BackendScoreSet(const Backend &backend, const std::vector<Vector> &vectors,
                         const std::vector<Utterance> &utts,
                         const std::vector<std::string> &languages) {
  Require(vectors.size() == utts.size(), ErrorKind::kDimensionMismatch,
          "embedding and utterance counts differ");
  ScoreSet s = EmptyScoreSet(utts, languages);
  ParallelFor(vectors.size(), [&](std::size_t i) {
    s.scores.row(static_cast<Eigen::Index>(i)) =
        ToLlr(backend.Posteriors(vectors[i])).transpose();
  });
  s.Validate();
  return s;
}

ScoreSet ModelScoreSet(const Model &model, const std::vector<Matrix> &inputs,
                       const std::vector<Utterance> &utts,
                       const std::vector<std::string> &languages) {
  Require(inputs.size() == utts.size(), ErrorKind::kDimensionMismatch,
          "input and utterance counts differ");
  ScoreSet s = EmptyScoreSet(utts, languages);
  ParallelFor(inputs.size(), [&](std::size_t i) {
    s.scores.row(static_cast<Eigen::Index>(i)) =
        ToLlr(model.Predict(inputs[i]).posteriors).transpose();
  });
  s.Validate();
  return s;
}

std::vector<std::pair<int, int>> AttentionFrameRanges(const ModelConfig &config,
                                                      int num_frames) {
  std::vector<std::pair<int, int>> out;
  switch (config.architecture) {
    case Architecture::kIBlstm:
    case Architecture::kXBlstm:
    case Architecture::kXBlstmE2e: {
      int n = NumSegmentWindows(num_frames, config.seg_win, config.seg_hop);
      for (int i = 0; i < n; ++i)
        out.emplace_back(i * config.seg_hop,
                         std::min(num_frames, i * config.seg_hop + config.seg_win));
      break;
    }
    case Architecture::kHgru: {
      HgruShape s = HgruWindowCounts(num_frames, config.hgru_window, config.hgru_hop,
                                     config.hgru_chunk);
      for (int c = 0; c < s.layer2; ++c) {
        int first = c * config.hgru_chunk;
        int last = std::min(s.layer1, first + config.hgru_chunk) - 1;
        out.emplace_back(first * config.hgru_hop, last * config.hgru_hop + config.hgru_window);
      }
      break;
    }
    default:
      break;
  }
  return out;
}

std::vector<AttentionRow> AttentionSnrRows(const std::vector<double> &attention,
                                           const std::vector<std::pair<int, int>> &ranges,
                                           const Utterance &utt) {
  Require(attention.size() == ranges.size(), ErrorKind::kDimensionMismatch,
          "attention has " + std::to_string(attention.size()) + " positions, expected " +
              std::to_string(ranges.size()));
  std::vector<AttentionRow> rows;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    AttentionRow r;
    r.position = static_cast<int>(i);
    r.weight = attention[i];
    if (!utt.snr_trace.empty()) {
      double sum = 0.0;
      for (int t = ranges[i].first; t < ranges[i].second; ++t) sum += utt.snr_trace[t];
      r.mean_snr_db = sum / (ranges[i].second - ranges[i].first);
    }
    rows.push_back(r);
  }
  return rows;
}

AttentionSplit SplitAttentionByNoise(const std::vector<double> &attention,
                                     const std::vector<std::pair<int, int>> &ranges,
                                     const Utterance &utt) {
  Require(attention.size() == ranges.size(), ErrorKind::kDimensionMismatch,
          "attention and position counts differ");
  Require(!utt.snr_trace.empty(), ErrorKind::kInvalidArgument,
          "utterance " + utt.id + " has no SNR trace");
  AttentionSplit s;
  double clean = 0.0, noisy = 0.0;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    int n_clean = 0, n = ranges[i].second - ranges[i].first;
    for (int t = ranges[i].first; t < ranges[i].second; ++t)
      n_clean += utt.snr_trace[t] >= kCleanSnrDb;
    if (n_clean == n) {
      clean += attention[i];
      ++s.clean_positions;
    } else if (n_clean == 0) {
      noisy += attention[i];
      ++s.noisy_positions;
    }
  }
  if (s.clean_positions) s.clean_mean = clean / s.clean_positions;
  if (s.noisy_positions) s.noisy_mean = noisy / s.noisy_positions;
  return s;
}

namespace {
constexpr std::string_view kEmbMagic = "REMB";
}  // namespace

void WriteEmbeddings(const std::string &path, const std::vector<EmbeddingEntry> &entries) {
  std::ofstream os = io::OpenOut(path);
  io::WriteMagic(os, kEmbMagic);
  io::WriteU32(os, static_cast<std::uint32_t>(entries.size()));
  for (const auto &e : entries) {
    io::WriteString(os, e.id);
    io::WriteI16(os, static_cast<std::int16_t>(e.label));
    io::WriteU32(os, static_cast<std::uint32_t>(e.value.rows()));
    io::WriteU32(os, static_cast<std::uint32_t>(e.value.cols()));
    io::WriteF32Matrix(os, e.value);
  }
  Require(os.good(), ErrorKind::kIo, "write failed: " + path);
}

std::vector<EmbeddingEntry> ReadEmbeddings(const std::string &path) {
  std::ifstream is = io::OpenIn(path);
  io::ExpectMagic(is, kEmbMagic);
  std::uint32_t count = io::ReadU32(is);
  std::vector<EmbeddingEntry> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingEntry e;
    e.id = io::ReadString(is);
    e.label = io::ReadI16(is);
    std::uint32_t rows = io::ReadU32(is), cols = io::ReadU32(is);
    io::CheckDims(rows, cols, "embedding " + e.id);
    e.value = io::ReadF32Matrix(is, rows, cols);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace relid
