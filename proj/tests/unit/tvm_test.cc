// tests/unit/tvm_test.cc

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
#include <memory>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "relid/tvm.h"

namespace relid {
namespace {

std::shared_ptr<const DiagonalGmm> SharedGmm(int c, int d, unsigned seed) {
  return std::make_shared<const DiagonalGmm>(testing::RandomGmm(c, d, seed));
}

TEST(Tvm, ZeroStatsGiveZeroIvector) {
  TvModel m = InitTvModel(SharedGmm(4, 3, 1), 5, 2, 1.0);
  Vector y = m.ExtractIvector(BwStats::Zero(4, 3));
  EXPECT_EQ(y.size(), 5);
  EXPECT_EQ(y.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Tvm, ScalarClosedForm) {
  auto ubm = std::make_shared<const DiagonalGmm>(Vector::Ones(1), Matrix::Zero(1, 1),
                                                 Matrix::Constant(1, 1, 2.0));
  TvModel m(ubm, Matrix::Constant(1, 1, 1.5));
  BwStats s = BwStats::Zero(1, 1);
  s.n(0) = 4.0;
  s.f(0, 0) = 3.0;
  // y = (t F / s) / (1 + N t^2 / s) = 2.25 / 5.5
  EXPECT_NEAR(m.ExtractIvector(s)(0), 2.25 / 5.5, 1e-14);
  Matrix precision;
  Vector linear;
  m.PosteriorTerms(s, &precision, &linear);
  EXPECT_NEAR(precision(0, 0), 5.5, 1e-14);
  EXPECT_NEAR(linear(0), 2.25, 1e-14);
}

TEST(Tvm, IvectorSolvesPosteriorSystem) {
  auto ubm = SharedGmm(5, 3, 4);
  TvModel m = InitTvModel(ubm, 4, 9, 0.5);
  auto stats = testing::SampleTvStats(*ubm, m.t(), 3, 5.0, 30.0, 1);
  for (const auto &s : stats) {
    Matrix precision;
    Vector linear;
    m.PosteriorTerms(s, &precision, &linear);
    Vector y = m.ExtractIvector(s);
    EXPECT_LT((precision * y - linear).norm(), 1e-10 * (1.0 + linear.norm()));
    // Direct assembly of L = I + sum_c N_c T_c' S_c^-1 T_c.
    Matrix direct = Matrix::Identity(4, 4);
    for (int c = 0; c < 5; ++c) {
      Matrix tc = m.t().middleRows(c * 3, 3);
      Vector sinv = ubm->variances().row(c).transpose().cwiseInverse();
      direct += s.n(c) * tc.transpose() * sinv.asDiagonal() * tc;
    }
    EXPECT_LT((direct - precision).cwiseAbs().maxCoeff(), 1e-10 * direct.norm());
  }
}

TEST(Tvm, ItersZeroReturnsInitialization) {
  auto ubm = SharedGmm(4, 2, 1);
  auto stats = testing::SampleTvStats(*ubm, Matrix::Random(8, 2), 10, 5.0, 10.0, 2);
  TvmTrainOptions o;
  o.rank = 2;
  o.iters = 0;
  o.seed = 5;
  auto r = TrainTvm(ubm, stats, o);
  EXPECT_TRUE(r.model.t() == InitTvModel(ubm, 2, 5, o.init_scale).t());
  EXPECT_EQ(r.objectives.size(), 1u);
}

TEST(Tvm, EmObjectiveIsMonotone) {
  auto ubm = SharedGmm(8, 3, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix t0(24, 3);
  for (Eigen::Index i = 0; i < t0.size(); ++i) t0.data()[i] = normal(rng);
  auto stats = testing::SampleTvStats(*ubm, t0, 100, 5.0, 40.0, 4);
  TvmTrainOptions o;
  o.rank = 3;
  o.iters = 15;
  auto r = TrainTvm(ubm, stats, o);
  ASSERT_EQ(r.objectives.size(), 16u);
  for (std::size_t i = 1; i < r.objectives.size(); ++i)
    EXPECT_GE(r.objectives[i], r.objectives[i - 1] - 1e-4) << i;
  EXPECT_NEAR(r.objectives.back(), TvmObjective(r.model, stats),
              1e-8 * std::abs(r.objectives.back()));
}

TEST(Tvm, RecoversPlantedSubspace) {
  auto ubm = SharedGmm(4, 4, 6);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  Matrix t0(16, 2);
  for (Eigen::Index i = 0; i < t0.size(); ++i) t0.data()[i] = 2.0 * normal(rng);
  auto stats = testing::SampleTvStats(*ubm, t0, 200, 50.0, 100.0, 8);
  TvmTrainOptions o;
  o.rank = 2;
  o.iters = 40;
  auto r = TrainTvm(ubm, stats, o);
  EXPECT_LT(testing::MaxPrincipalAngleDeg(r.model.t(), t0), 5.0);
}

TEST(Tvm, TrainingIsDeterministic) {
  auto ubm = SharedGmm(4, 2, 1);
  auto stats = testing::SampleTvStats(*ubm, Matrix::Random(8, 2), 20, 5.0, 10.0, 2);
  TvmTrainOptions o;
  o.rank = 2;
  o.iters = 3;
  EXPECT_TRUE(TrainTvm(ubm, stats, o).model.t() == TrainTvm(ubm, stats, o).model.t());
}

TEST(Tvm, ShapeChecks) {
  auto ubm = SharedGmm(4, 2, 1);
  EXPECT_THROW(TvModel(ubm, Matrix::Zero(7, 2)), Error);
  EXPECT_THROW(TvModel(nullptr, Matrix::Zero(8, 2)), Error);
  TvModel m = InitTvModel(ubm, 2, 1);
  EXPECT_THROW(m.ExtractIvector(BwStats::Zero(3, 2)), Error);
}

TEST(Segments, WindowCounts) {
  EXPECT_EQ(NumSegmentWindows(1000, 100, 20), 46);
  EXPECT_EQ(NumSegmentWindows(100, 100, 20), 1);
  EXPECT_EQ(NumSegmentWindows(50, 100, 20), 1);
  EXPECT_EQ(NumSegmentWindows(119, 100, 20), 1);
  EXPECT_EQ(NumSegmentWindows(120, 100, 20), 2);
}

TEST(Segments, UnvoicedWindowGivesZero) {
  auto ubm = SharedGmm(4, 2, 1);
  TvModel m = InitTvModel(ubm, 3, 1, 1.0);
  FeatureSequence f = FeatureSequence::FromFrames(FeatureMatrix::Random(300, 2));
  for (int t = 0; t < 100; ++t) f.voiced[t] = 0;
  auto segs = SegmentIvectors(m, f, 100, 100);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(segs[1].norm(), 0.0);
}

TEST(Segments, MatchesWholeUtteranceExtraction) {
  auto ubm = SharedGmm(4, 2, 1);
  TvModel m = InitTvModel(ubm, 3, 1, 1.0);
  FeatureSequence f = FeatureSequence::FromFrames(FeatureMatrix::Random(250, 2));
  auto segs = SegmentIvectors(m, f, 100, 50);
  ASSERT_EQ(segs.size(), 4u);
  Vector direct = m.ExtractIvector(AccumulateStats(*ubm, f.Slice(50, 100)));
  EXPECT_LT((segs[1] - direct).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TvmIo, RoundTripAndHashBinding) {
  auto ubm = SharedGmm(4, 2, 1);
  TvModel m = InitTvModel(ubm, 3, 1, 1.0);
  std::stringstream ss;
  m.Write(ss);
  std::string bytes = ss.str();
  std::stringstream in(bytes);
  TvModel back = TvModel::Read(in, ubm);
  EXPECT_LT((back.t() - m.t()).cwiseAbs().maxCoeff(), 1e-6);
  std::stringstream other(bytes);
  try {
    TvModel::Read(other, SharedGmm(4, 2, 2));
    FAIL() << "expected a UBM mismatch";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
}

TEST(StackRows, Shapes) {
  Matrix m = StackRows({Vector::Ones(3), Vector::Zero(3)});
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m(0, 2), 1.0);
}

}  // namespace
}  // namespace relid
