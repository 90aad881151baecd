// tests/unit/eval_test.cc

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
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "relid/eval.h"

namespace relid {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ScoreSet MakeSet(Matrix scores, std::vector<int> labels) {
  ScoreSet s;
  s.scores = std::move(scores);
  s.labels = std::move(labels);
  for (int l = 0; l < s.scores.cols(); ++l) s.languages.push_back("l" + std::to_string(l));
  return s;
}

ScoreSet OracleSet(int n, int l) {
  Matrix m = Matrix::Constant(n, l, -kInf);
  std::vector<int> labels;
  for (int i = 0; i < n; ++i) {
    labels.push_back(i % l);
    m(i, i % l) = kInf;
  }
  return MakeSet(m, labels);
}

ScoreSet RandomSet(std::mt19937_64 &rng, bool discrete) {
  std::uniform_int_distribution<int> nl(2, 6);
  int l = nl(rng);
  int n = std::uniform_int_distribution<int>(2 * l, 50)(rng);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_int_distribution<int> coarse(-4, 4);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i < 2 * l ? i % l : std::uniform_int_distribution<int>(0, l - 1)(rng);
  Matrix m(n, l);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < l; ++j)
      m(i, j) = discrete ? 0.5 * coarse(rng) : normal(rng) + (labels[i] == j ? 1.5 : 0.0);
  return MakeSet(m, labels);
}

TEST(Accuracy, HandCases) {
  ScoreSet s = MakeSet(Matrix::Identity(3, 3), {0, 1, 2});
  EXPECT_EQ(Accuracy(s), 1.0);
  s.labels = {1, 2, 0};
  EXPECT_EQ(Accuracy(s), 0.0);
  Matrix m(4, 2);
  m << 1, 0, 0, 1, 1, 0, 1, 0;
  EXPECT_EQ(Accuracy(MakeSet(m, {0, 1, 0, 1})), 0.75);
}

TEST(Accuracy, TiesGoToLowestIndex) {
  EXPECT_EQ(Accuracy(MakeSet(Matrix::Zero(2, 3), {0, 1})), 0.5);
}

TEST(Eer, SeparatedScoresGiveZero) {
  EXPECT_EQ(DetectionEer({2, 3, 4}, {-1, 0, 1}), 0.0);
}

TEST(Eer, AllEqualScoresGiveHalf) {
  EXPECT_DOUBLE_EQ(DetectionEer({1, 1, 1}, {1, 1}), 0.5);
}

TEST(Eer, FourTrialHandCase) {
  EXPECT_DOUBLE_EQ(DetectionEer({0.9, 0.4}, {0.6, 0.1}), 0.25);
  EXPECT_DOUBLE_EQ(testing::BruteForceEer({0.9, 0.4}, {0.6, 0.1}), 0.25);
}

TEST(Eer, RequiresTargetsAndNontargets) {
  EXPECT_THROW(DetectionEer({}, {1.0}), Error);
  EXPECT_THROW(Eer(MakeSet(Matrix::Zero(2, 3), {0, 1})), Error);
}

TEST(Eer, DetCurveEndpoints) {
  auto det = DetCurve({0.9, 0.4}, {0.6, 0.1});
  EXPECT_EQ(det.front().p_miss, 0.0);
  EXPECT_EQ(det.front().p_fa, 1.0);
  EXPECT_EQ(det.back().p_miss, 1.0);
  EXPECT_EQ(det.back().p_fa, 0.0);
}

TEST(Eer, MatchesBruteForceOnRandomSets) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    ScoreSet s = RandomSet(rng, trial % 2 == 1);
    EerResult r = Eer(s);
    EXPECT_NEAR(r.average, testing::BruteForceEerAverage(s), 1e-9) << "trial " << trial;
    for (double e : r.per_language) {
      EXPECT_GE(e, 0.0);
      EXPECT_LE(e, 1.0);
    }
  }
}

TEST(Eer, RankStatisticsAreInvariantToIncreasingTransforms) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ScoreSet s = RandomSet(rng, trial % 2 == 0);
    ScoreSet t = s;
    t.scores = s.scores.unaryExpr([](double v) { return std::exp(0.7 * v) - 3.0; });
    EXPECT_NEAR(Eer(s).average, Eer(t).average, 1e-12);
    EXPECT_EQ(Accuracy(s), Accuracy(t));
  }
}

TEST(Cavg, OracleScoresCostNothing) {
  ScoreSet s = OracleSet(12, 4);
  CavgResult r = Cavg(s);
  EXPECT_EQ(r.primary, 0.0);
  for (double c : r.per_beta) EXPECT_EQ(c, 0.0);
  EXPECT_EQ(Eer(s).average, 0.0);
  EXPECT_EQ(Accuracy(s), 1.0);
}

TEST(Cavg, ZeroScoresAtBetaOneAreAllMisses) {
  ScoreSet s = MakeSet(Matrix::Zero(6, 3), {0, 1, 2, 0, 1, 2});
  CavgResult r = Cavg(s, {1.0});
  EXPECT_EQ(r.per_beta[0], 1.0);
  for (double pm : r.p_miss[0]) EXPECT_EQ(pm, 1.0);
}

TEST(Cavg, TwoLanguageHandCase) {
  Matrix m(4, 2);
  m << 2.5, -1.0, 0.3, 1.2, -0.5, 3.0, 2.0, 2.4;
  ScoreSet s = MakeSet(m, {0, 0, 1, 1});
  CavgResult r = Cavg(s);
  // beta = 1 (threshold 0): Pm = 0 for both, Pf(0,1) = Pf(1,0) = 1/2 -> 0.5.
  // beta = 9 (threshold 2.197): Pm(0) = 1/2, Pm(1) = 0, no false alarms
  // -> 0.25.
  EXPECT_NEAR(r.per_beta[0], 0.5, 1e-12);
  EXPECT_NEAR(r.per_beta[1], 0.25, 1e-12);
  EXPECT_NEAR(r.primary, 0.375, 1e-12);
  EXPECT_NEAR(r.per_beta[0], testing::BruteForceCavg(s, 1.0), 1e-12);
  EXPECT_NEAR(r.per_beta[1], testing::BruteForceCavg(s, 9.0), 1e-12);
}

TEST(Cavg, MatchesBruteForceOnRandomSets) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    ScoreSet s = RandomSet(rng, trial % 3 == 0);
    CavgResult r = Cavg(s);
    double b1 = testing::BruteForceCavg(s, 1.0), b9 = testing::BruteForceCavg(s, 9.0);
    EXPECT_NEAR(r.per_beta[0], b1, 1e-9);
    EXPECT_NEAR(r.per_beta[1], b9, 1e-9);
    EXPECT_NEAR(r.primary, 0.5 * (b1 + b9), 1e-9);
    EXPECT_GE(r.primary, 0.0);
  }
}

TEST(Cavg, RepeatedEvaluationIsBitIdentical) {
  std::mt19937_64 rng(3);
  ScoreSet s = RandomSet(rng, false);
  EXPECT_EQ(Cavg(s).primary, Cavg(s).primary);
}

TEST(Cavg, MissingTargetLanguageFails) {
  EXPECT_THROW(Cavg(MakeSet(Matrix::Zero(2, 3), {0, 1})), Error);
}

TEST(ToLlr, UniformPosteriorIsExactlyZero) {
  for (int l = 2; l <= 20; ++l)
    EXPECT_EQ(ToLlr(Vector::Constant(l, 1.0 / l)).cwiseAbs().maxCoeff(), 0.0) << l;
}

TEST(ToLlr, MatchesClosedFormOnRandomPosteriors) {
  std::mt19937_64 rng(21);
  std::gamma_distribution<double> gd(0.8, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    int l = 2 + trial % 7;
    Vector p(l);
    for (int k = 0; k < l; ++k) p(k) = gd(rng) + 1e-6;
    p /= p.sum();
    Vector llr = ToLlr(p);
    for (int k = 0; k < l; ++k)
      EXPECT_NEAR(llr(k), std::log(p(k)) - std::log((1.0 - p(k)) / (l - 1)), 1e-9);
  }
}

TEST(ToLlr, ConfidentPosteriorClamps) {
  Vector p(3);
  p << 1.0, 0.0, 0.0;
  Vector llr = ToLlr(p);
  EXPECT_EQ(llr(0), kLlrClamp);
  EXPECT_EQ(llr(1), -kLlrClamp);
}

TEST(ToLlr, TwoClassHandValue) {
  Vector p(2);
  p << 0.9, 0.1;
  EXPECT_NEAR(ToLlr(p)(0), std::log(9.0), 1e-12);
  EXPECT_NEAR(ToLlr(p)(0), 2.197224577, 1e-9);
}

TEST(ScoreSet, RejectsNanAndBadLabels) {
  ScoreSet s = MakeSet(Matrix::Zero(2, 2), {0, 1});
  s.scores(0, 0) = std::nan("");
  EXPECT_THROW(s.Validate(), Error);
  s = MakeSet(Matrix::Zero(2, 2), {0, 2});
  EXPECT_THROW(s.Validate(), Error);
}

TEST(ScoreFile, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  ScoreSet s = RandomSet(rng, false);
  s.scores(0, 0) = kInf;
  s.scores(1, 0) = -kInf;
  for (int i = 0; i < s.NumTrials(); ++i) s.trial_ids.push_back("t" + std::to_string(i));
  std::stringstream ss;
  WriteScores(s, ss);
  ScoreSet back = ReadScores(ss);
  EXPECT_EQ(back.labels, s.labels);
  EXPECT_EQ(back.languages, s.languages);
  EXPECT_EQ(back.trial_ids, s.trial_ids);
  EXPECT_TRUE(back.scores == s.scores);
}

TEST(ScoreFile, RejectsMalformedRows) {
  std::stringstream ss("trial_id,label,a,b\nx,a,1.0\n");
  EXPECT_THROW(ReadScores(ss), Error);
}

TEST(Report, ContainsPrimaryKeys) {
  MetricsReport r = Evaluate(OracleSet(6, 3));
  std::stringstream ss;
  WriteReport(r, ss);
  std::string text = ss.str();
  for (const char *key : {"accuracy=1", "eer=0", "c_avg=0", "num_trials=6"})
    EXPECT_NE(text.find(key), std::string::npos) << key;
}

}  // namespace
}  // namespace relid
