// tests/unit/pipeline_test.cc

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

#include <filesystem>
#include <memory>

#include <gtest/gtest.h>

#include "gradcheck.h"
#include "oracles.h"
#include "relid/pipeline.h"

namespace relid {
namespace {

std::vector<Utterance> SmallCorpus(NoiseMode mode = NoiseMode::kClean) {
  CorpusConfig c;
  c.utts_per_language = 2;
  c.min_duration_s = c.max_duration_s = 3.0;
  c.dim = 4;
  c.source_components = 4;
  c.noise = mode;
  return GenerateCorpus(c);
}

TEST(Augment, OneNoisyCopyPerUtterance) {
  auto utts = SmallCorpus();
  AugmentOptions o;
  o.snrs_db = {5.0};
  auto aug = AugmentWithNoise(utts, o);
  ASSERT_EQ(aug.size(), utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    EXPECT_EQ(aug[i].id, utts[i].id + "-aug");
    EXPECT_EQ(aug[i].language, utts[i].language);
    int n = aug[i].features.NumFrames(), noisy = 0, first = -1, last = -1;
    for (int t = 0; t < n; ++t)
      if (aug[i].snr_trace[t] < kCleanSnrDb) {
        ++noisy;
        if (first < 0) first = t;
        last = t;
      }
    EXPECT_EQ(last - first + 1, noisy) << "noisy region must be contiguous";
    EXPECT_GE(noisy, static_cast<int>(0.3 * n) - 1);
    EXPECT_LE(noisy, static_cast<int>(0.7 * n) + 1);
  }
  auto again = AugmentWithNoise(utts, o);
  EXPECT_TRUE(again[0].features.frames == aug[0].features.frames);
}

TEST(Augment, SeveralRegionsStayInTheirSlots) {
  auto utts = SmallCorpus();
  AugmentOptions o;
  o.snrs_db = {0.0};
  o.regions = 3;
  o.min_fraction = o.max_fraction = 0.5;
  for (const auto &u : AugmentWithNoise(utts, o)) {
    int n = u.features.NumFrames();
    for (int k = 0; k < 3; ++k) {
      int noisy = 0;
      for (int t = n * k / 3; t < n * (k + 1) / 3; ++t) noisy += u.snr_trace[t] < kCleanSnrDb;
      EXPECT_EQ(noisy, 50) << u.id << " slot " << k;
    }
  }
  // Each run is scaled against the clean utterance, so later runs are not
  // louder than earlier ones.
  double first = 0, last = 0;
  int nf = 0, nl = 0;
  for (const auto &u : AugmentWithNoise(utts, o)) {
    int n = u.features.NumFrames();
    for (int t = 0; t < n; ++t) {
      if (u.snr_trace[t] >= kCleanSnrDb) continue;
      (t < n / 3 ? first : last) += u.snr_trace[t];
      (t < n / 3 ? nf : nl) += 1;
    }
  }
  EXPECT_NEAR(first / nf, last / nl, 0.5);
}

TEST(Augment, RejectsBadOptions) {
  AugmentOptions o;
  o.snrs_db.clear();
  EXPECT_THROW(AugmentWithNoise(SmallCorpus(), o), Error);
  o = {};
  o.min_fraction = 0.8;
  o.max_fraction = 0.5;
  EXPECT_THROW(AugmentWithNoise(SmallCorpus(), o), Error);
  o = {};
  o.regions = 0;
  EXPECT_THROW(AugmentWithNoise(SmallCorpus(), o), Error);
  o = {};
  o.copies = 0;
  EXPECT_THROW(AugmentWithNoise(SmallCorpus(), o), Error);
}

TEST(Augment, CopiesAreCopyMajorWithDistinctDraws) {
  auto utts = SmallCorpus();
  AugmentOptions o;
  o.copies = 3;
  auto aug = AugmentWithNoise(utts, o);
  ASSERT_EQ(aug.size(), 3 * utts.size());
  const std::size_t n = utts.size();
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(aug[i].id, utts[i].id + "-aug");
    EXPECT_EQ(aug[n + i].id, utts[i].id + "-aug2");
    EXPECT_EQ(aug[2 * n + i].id, utts[i].id + "-aug3");
    EXPECT_FALSE(aug[i].features.frames.isApprox(aug[n + i].features.frames));
  }
  // The first copy does not depend on how many copies are requested.
  o.copies = 1;
  auto single = AugmentWithNoise(utts, o);
  for (std::size_t i = 0; i < n; ++i)
    EXPECT_EQ(single[i].features.frames, aug[i].features.frames);
}

TEST(Frontend, MarksSilenceAndNormalizes) {
  auto utts = PreprocessCorpus(SmallCorpus(), FrontendOptions{});
  for (const auto &u : utts) {
    int n = u.features.NumFrames();
    EXPECT_LT(u.features.NumVoiced(), n);
    EXPECT_GE(u.features.NumVoiced(), static_cast<int>(0.85 * n));
    EXPECT_LT(u.features.frames.cast<double>().cwiseAbs().maxCoeff(), 50.0);
  }
}

TEST(Split, SegmentExamplesUseStride) {
  std::vector<Matrix> seqs = {testing::RandomMatrix(10, 3, 1), testing::RandomMatrix(4, 3, 2)};
  auto ex = SegmentExamples(seqs, {2, 0}, 3);
  ASSERT_EQ(ex.size(), 6u);  // rows 0,3,6,9 and 0,3
  EXPECT_EQ(ex[1].input, seqs[0].row(3));
  EXPECT_EQ(ex[4].label, 0);
  EXPECT_EQ(ex[0].input.rows(), 1);
}

TEST(Ranges, SegmentPositionsCoverWindows) {
  ModelConfig c = ModelConfig::Preset(Architecture::kIBlstm, "desk");
  auto r = AttentionFrameRanges(c, 1000);
  ASSERT_EQ(r.size(), 46u);
  EXPECT_EQ(r[0], std::make_pair(0, 100));
  EXPECT_EQ(r[45], std::make_pair(900, 1000));
  EXPECT_EQ(AttentionFrameRanges(c, 50).size(), 1u);
  EXPECT_EQ(AttentionFrameRanges(c, 50)[0], std::make_pair(0, 50));
}

TEST(Ranges, HgruPositionsAreOneSecondChunks) {
  ModelConfig c = ModelConfig::Preset(Architecture::kHgru, "desk");
  auto r = AttentionFrameRanges(c, 1000);
  ASSERT_EQ(r.size(), 10u);
  EXPECT_EQ(r[0], std::make_pair(0, 110));
  EXPECT_EQ(r[9], std::make_pair(900, 1000));
  EXPECT_TRUE(AttentionFrameRanges(ModelConfig::Preset(Architecture::kXvector, "desk"), 1000).empty());
}

TEST(Ranges, AttentionSplitByNoise) {
  Utterance u;
  u.features = FeatureSequence::FromFrames(FeatureMatrix::Zero(8, 1));
  u.snr_trace = {5, 5, 5, 5, float(kCleanSnrDb), float(kCleanSnrDb), float(kCleanSnrDb), float(kCleanSnrDb)};
  std::vector<std::pair<int, int>> ranges = {{0, 2}, {2, 4}, {3, 5}, {4, 6}, {6, 8}};
  std::vector<double> a = {0.1, 0.1, 0.2, 0.3, 0.3};
  AttentionSplit s = SplitAttentionByNoise(a, ranges, u);
  EXPECT_EQ(s.noisy_positions, 2);
  EXPECT_EQ(s.clean_positions, 2);
  EXPECT_NEAR(s.noisy_mean, 0.1, 1e-15);
  EXPECT_NEAR(s.clean_mean, 0.3, 1e-15);
  auto rows = AttentionSnrRows(a, ranges, u);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_NEAR(rows[0].mean_snr_db, 5.0, 1e-12);
  EXPECT_EQ(rows[4].mean_snr_db, kCleanSnrDb);
  EXPECT_EQ(rows[2].position, 2);
}

TEST(Rwbw, UniformDnnFallsBackToUnitWeights) {
  auto ubm = std::make_shared<const DiagonalGmm>(testing::RandomGmm(4, 4, 1));
  TvModel tvm = InitTvModel(ubm, 3, 2, 0.5);
  ModelConfig dc = ModelConfig::Preset(Architecture::kEntropyDnn, "desk");
  dc.input_dim = 3;
  auto dnn = CreateModel(dc);  // zero output layer: uniform posteriors
  Utterance u = SmallCorpus()[0];
  RwbwResult r = RwbwIvector(tvm, *dnn, u.features, GammaConfig::Default(3));
  EXPECT_TRUE(r.fell_back);
  for (double g : r.gamma) EXPECT_EQ(g, 1.0);
  EXPECT_LT((r.ivector - UtteranceIvector(tvm, u.features)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Scores, BackendAndModelScoreSetsAreValid) {
  auto utts = SmallCorpus();
  ModelConfig dc = ModelConfig::Preset(Architecture::kEntropyDnn, "desk");
  dc.input_dim = 2;
  auto dnn = CreateModel(dc);
  std::vector<Matrix> inputs(utts.size(), Matrix::Ones(1, 2));
  ScoreSet s = ModelScoreSet(*dnn, inputs, utts, DefaultLanguageNames(3));
  s.Validate();
  EXPECT_EQ(s.NumTrials(), 6);
  EXPECT_EQ(s.trial_ids[0], utts[0].id);
  EXPECT_EQ(s.languages[2], "lang2");
  EXPECT_NEAR(s.scores(0, 0), 0.0, 1e-12);
}

TEST(Embeddings, ArchiveRoundTrip) {
  auto path = (std::filesystem::temp_directory_path() / "relid-emb.remb").string();
  std::vector<EmbeddingEntry> e = {{"a", 1, testing::RandomMatrix(3, 2, 1)},
                                   {"b", -1, testing::RandomMatrix(1, 2, 2)}};
  WriteEmbeddings(path, e);
  auto back = ReadEmbeddings(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].id, "a");
  EXPECT_EQ(back[1].label, -1);
  EXPECT_LT((back[0].value - e[0].value).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_THROW(ReadEmbeddings(path + ".absent"), Error);
}

}  // namespace
}  // namespace relid
