// tests/unit/corpus_test.cc

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "relid/corpus.h"

namespace relid {
namespace {

CorpusConfig SmallConfig(NoiseMode mode = NoiseMode::kClean) {
  CorpusConfig c;
  c.num_languages = 3;
  c.utts_per_language = 2;
  c.min_duration_s = 2.0;
  c.max_duration_s = 2.0;
  c.dim = 6;
  c.source_components = 4;
  c.noise = mode;
  c.snr_db = 10.0;
  c.id_prefix = "t";
  return c;
}

std::filesystem::path TempDir(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / ("relid-corpus-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(Corpus, CleanTraceIsSentinel) {
  for (const auto &u : GenerateCorpus(SmallConfig())) {
    ASSERT_EQ(u.snr_trace.size(), static_cast<std::size_t>(u.features.NumFrames()));
    for (float s : u.snr_trace) EXPECT_EQ(s, static_cast<float>(kCleanSnrDb));
  }
}

TEST(Corpus, ShapesLabelsAndIds) {
  auto utts = GenerateCorpus(SmallConfig());
  ASSERT_EQ(utts.size(), 6u);
  for (const auto &u : utts) {
    EXPECT_EQ(u.features.NumFrames(), 200);
    EXPECT_EQ(u.features.Dim(), 6);
    EXPECT_GE(u.language, 0);
    EXPECT_LT(u.language, 3);
    EXPECT_EQ(u.id.rfind("t-l" + std::to_string(u.language) + "-", 0), 0u) << u.id;
    u.features.Validate();
  }
}

TEST(Corpus, PartialNoiseCoversFirstHalf) {
  CorpusConfig c = SmallConfig(NoiseMode::kPartial);
  c.utts_per_language = 4;
  c.min_duration_s = c.max_duration_s = 10.0;
  c.dim = 20;
  double sum = 0.0;
  int count = 0;
  for (const auto &u : GenerateCorpus(c)) {
    int n = u.features.NumFrames();
    for (int t = 0; t < n; ++t) {
      if (t < n / 2) {
        ASSERT_LT(u.snr_trace[t], kCleanSnrDb);
        sum += u.snr_trace[t];
        ++count;
      } else {
        ASSERT_EQ(u.snr_trace[t], static_cast<float>(kCleanSnrDb));
      }
    }
  }
  EXPECT_NEAR(sum / count, 10.0, 1.0);
}

TEST(Corpus, FullNoiseCoversEveryFrame) {
  for (const auto &u : GenerateCorpus(SmallConfig(NoiseMode::kFull)))
    for (float s : u.snr_trace) EXPECT_LT(s, kCleanSnrDb);
}

TEST(Corpus, DeterministicInConfig) {
  auto a = GenerateCorpus(SmallConfig(NoiseMode::kPartial));
  auto b = GenerateCorpus(SmallConfig(NoiseMode::kPartial));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_TRUE(a[i].features.frames == b[i].features.frames);
    EXPECT_EQ(a[i].snr_trace, b[i].snr_trace);
  }
  CorpusConfig other = SmallConfig(NoiseMode::kPartial);
  other.seed = 2;
  EXPECT_FALSE(GenerateCorpus(other)[0].features.frames == a[0].features.frames);
}

TEST(Corpus, PrefixesGiveDisjointUtterances) {
  CorpusConfig c = SmallConfig();
  auto a = GenerateCorpus(c);
  c.id_prefix = "u";
  auto b = GenerateCorpus(c);
  EXPECT_FALSE(a[0].features.frames == b[0].features.frames);
}

TEST(Corpus, DurationsWithinRange) {
  CorpusConfig c = SmallConfig();
  c.min_duration_s = 1.0;
  c.max_duration_s = 3.0;
  c.utts_per_language = 10;
  for (const auto &u : GenerateCorpus(c)) {
    EXPECT_GE(u.features.NumFrames(), 100);
    EXPECT_LE(u.features.NumFrames(), 300);
  }
}

TEST(Corpus, InvalidConfigsFail) {
  CorpusConfig c = SmallConfig();
  c.num_languages = 1;
  EXPECT_THROW(GenerateCorpus(c), Error);
  c = SmallConfig();
  c.min_duration_s = 3.0;
  c.max_duration_s = 2.0;
  EXPECT_THROW(GenerateCorpus(c), Error);
  c = SmallConfig();
  c.dim = 0;
  EXPECT_THROW(GenerateCorpus(c), Error);
  c = SmallConfig();
  c.snr_db = NAN;
  EXPECT_THROW(GenerateCorpus(c), Error);
  EXPECT_THROW(ParseNoiseMode("loud"), Error);
  EXPECT_EQ(ParseNoiseMode("partial"), NoiseMode::kPartial);
  EXPECT_EQ(NoiseModeName(NoiseMode::kFull), "full");
}

TEST(Noise, EmptyRangeIsNoop) {
  Utterance u = GenerateCorpus(SmallConfig())[0];
  FeatureMatrix before = u.features.frames;
  AddNoise(u, 0.0, 10, 10, 1);
  EXPECT_TRUE(u.features.frames == before);
  EXPECT_THROW(AddNoise(u, 0.0, 10, 500, 1), Error);
}

TEST(Sad, QuantileZeroKeepsEverything) {
  FeatureSequence f = FeatureSequence::FromFrames(FeatureMatrix::Random(50, 3));
  EXPECT_EQ(ApplySad(f, 0.0).NumVoiced(), 50);
}

TEST(Sad, DropsLowestEnergyFrames) {
  FeatureMatrix x(10, 1);
  for (int t = 0; t < 10; ++t) x(t, 0) = static_cast<float>(t);
  FeatureSequence f = ApplySad(FeatureSequence::FromFrames(x), 0.3);
  // k = ceil(3) - 1 = 2: energies 0, 1, 4 are at or below the threshold.
  for (int t = 0; t < 10; ++t) EXPECT_EQ(f.voiced[t], t >= 3 ? 1 : 0) << t;
  EXPECT_THROW(ApplySad(f, 1.0), Error);
}

TEST(Cmvn, UtteranceStageGivesZeroMeanUnitVariance) {
  FeatureMatrix x = FeatureMatrix::Random(400, 4) * 3.0f;
  x.array() += 5.0f;
  FeatureSequence f = CmvnUtterance(FeatureSequence::FromFrames(x));
  Eigen::MatrixXd y = f.frames.cast<double>();
  Eigen::RowVectorXd mean = y.colwise().mean();
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(mean(j), 0.0, 1e-5);
    EXPECT_NEAR((y.col(j).array() - mean(j)).square().mean(), 1.0, 1e-4);
  }
}

TEST(Cmvn, ConstantInputMapsToZero) {
  FeatureSequence f = FeatureSequence::FromFrames(FeatureMatrix::Constant(20, 2, 7.0f));
  FeatureSequence g = Cmvn(f, 0.1);
  EXPECT_EQ(g.frames.cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Cmvn, WindowIsCenteredAndClipped) {
  EXPECT_EQ(CmvnWindow(500, 1000, 300), std::make_pair(350, 650));
  EXPECT_EQ(CmvnWindow(0, 1000, 300), std::make_pair(0, 150));
  EXPECT_EQ(CmvnWindow(999, 1000, 300), std::make_pair(849, 1000));
}

TEST(Cmvn, SlidingMatchesDirectWindowStatistics) {
  FeatureMatrix x = FeatureMatrix::Random(60, 2);
  FeatureSequence f = FeatureSequence::FromFrames(x);
  for (int t = 0; t < 60; t += 7) f.voiced[t] = 0;
  FeatureSequence g = CmvnSliding(f, 0.2);  // 20 frames
  for (int t : {0, 13, 30, 59}) {
    auto [b, e] = CmvnWindow(t, 60, 20);
    for (int j = 0; j < 2; ++j) {
      double s = 0, ss = 0;
      int c = 0;
      for (int u = b; u < e; ++u) {
        if (!f.voiced[u]) continue;
        s += x(u, j);
        ss += double(x(u, j)) * x(u, j);
        ++c;
      }
      double mean = s / c, var = ss / c - mean * mean;
      EXPECT_NEAR(g.frames(t, j), (x(t, j) - mean) / std::sqrt(var), 1e-4);
    }
  }
}

TEST(Cmvn, AllUnvoicedFails) {
  FeatureSequence f = FeatureSequence::FromFrames(FeatureMatrix::Random(5, 2));
  f.voiced.assign(5, 0);
  EXPECT_THROW(CmvnUtterance(f), Error);
}

TEST(FeatureIo, RoundTripIsExact) {
  Utterance u = GenerateCorpus(SmallConfig(NoiseMode::kPartial))[1];
  u.features.voiced[3] = 0;
  std::stringstream ss;
  WriteFeatures(u, ss);
  Utterance v = ReadFeatures(ss, u.id);
  EXPECT_EQ(v.id, u.id);
  EXPECT_EQ(v.language, u.language);
  EXPECT_TRUE(v.features.frames == u.features.frames);
  EXPECT_EQ(v.features.voiced, u.features.voiced);
  EXPECT_EQ(v.snr_trace, u.snr_trace);
  EXPECT_EQ(v.features.hop_ms, u.features.hop_ms);
}

TEST(FeatureIo, SingleFrameSingleDim) {
  Utterance u;
  u.id = "one";
  u.features = FeatureSequence::FromFrames(FeatureMatrix::Constant(1, 1, -2.5f));
  std::stringstream ss;
  WriteFeatures(u, ss);
  Utterance v = ReadFeatures(ss, "one");
  EXPECT_EQ(v.features.NumFrames(), 1);
  EXPECT_EQ(v.features.frames(0, 0), -2.5f);
  EXPECT_EQ(v.language, -1);
  EXPECT_TRUE(v.snr_trace.empty());
}

TEST(FeatureIo, CorruptInputsFail) {
  std::stringstream bad("XXXX0000000000");
  try {
    ReadFeatures(bad, "x");
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
  Utterance u = GenerateCorpus(SmallConfig())[0];
  std::stringstream ss;
  WriteFeatures(u, ss);
  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(ReadFeatures(truncated, "x"), Error);
}

TEST(Manifest, RoundTripAndLoad) {
  auto dir = TempDir("manifest");
  auto utts = GenerateCorpus(SmallConfig());
  std::vector<ManifestEntry> entries;
  for (const auto &u : utts) {
    WriteFeatures(u, (dir / (u.id + ".rlid")).string());
    entries.push_back({u.id + ".rlid", u.language});
  }
  std::string path = (dir / "list.scp").string();
  WriteManifest(path, entries);
  auto back = ReadManifest(path);
  ASSERT_EQ(back.size(), entries.size());
  EXPECT_EQ(back[2].path, entries[2].path);
  auto loaded = LoadManifest(path);
  ASSERT_EQ(loaded.size(), utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    EXPECT_EQ(loaded[i].id, utts[i].id);
    EXPECT_EQ(loaded[i].language, utts[i].language);
    EXPECT_TRUE(loaded[i].features.frames == utts[i].features.frames);
  }
}

TEST(Manifest, MissingAndMalformed) {
  auto dir = TempDir("bad-manifest");
  try {
    ReadManifest((dir / "absent.scp").string());
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingArtifact);
  }
  std::ofstream((dir / "bad.scp").string()) << "only-a-path\n";
  EXPECT_THROW(ReadManifest((dir / "bad.scp").string()), Error);
}

TEST(FeatureSequence, ValidateAndSlice) {
  FeatureSequence f = FeatureSequence::FromFrames(FeatureMatrix::Random(10, 2));
  FeatureSequence s = f.Slice(2, 5);
  EXPECT_EQ(s.NumFrames(), 5);
  EXPECT_TRUE(s.frames == f.frames.middleRows(2, 5));
  EXPECT_THROW(f.Slice(8, 5), Error);
  f.frames(0, 0) = NAN;
  EXPECT_THROW(f.Validate(), Error);
}

}  // namespace
}  // namespace relid
