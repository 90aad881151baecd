// tests/unit/models_test.cc

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
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.h"
#include "relid/models.h"
#include "relid/training.h"

namespace relid {
namespace {

using testing::RandomMatrix;

ModelConfig TinyConfig(Architecture arch) {
  ModelConfig c = ModelConfig::Preset(arch, "desk");
  c.num_languages = 3;
  c.input_dim = 4;
  c.dnn_hidden = {5, 4};
  c.lstm_cells = 3;
  c.fc_dim = 4;
  c.hgru_dims = {3, 4, 3};
  c.hgru_window = 4;
  c.hgru_hop = 2;
  c.hgru_chunk = 2;
  c.tdnn_dim = 4;
  c.tdnn_offsets = {{-1, 0, 1}, {0}};
  c.xvector_dim = 3;
  c.seg_win = 4;
  c.seg_hop = 2;
  return c;
}

// Output layers start at zero; random parameters exercise every path.
void RandomizeParameters(nn::ParameterStore &store, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (nn::Parameter *p : store.All())
    if (p->name.rfind("input.", 0) != 0)
      for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value(i) = normal(rng);
}

void ExpectModelGradients(Model &model, const Matrix &input, int label) {
  RandomizeParameters(model.params(), 3);
  auto r = testing::CheckGradients(
      [&](nn::Graph &g, const std::vector<nn::Var> &) {
        ForwardResult f = model.Forward(g, input);
        nn::Var loss = nn::SoftmaxXent(f.logits, label);
        if (f.attention.valid()) loss = nn::Add(loss, testing::Probe(g, f.attention, 5));
        return loss;
      },
      {}, &model.params());
  EXPECT_GT(r.entries_checked, 0);
  EXPECT_LE(r.worst_ratio, 1.0) << r.worst_entry;
}

TEST(Models, InitialLossIsLogL) {
  for (Architecture a : {Architecture::kEntropyDnn, Architecture::kIBlstm, Architecture::kHgru,
                         Architecture::kXvector}) {
    ModelConfig c = TinyConfig(a);
    auto m = CreateModel(c);
    Matrix input = a == Architecture::kEntropyDnn ? RandomMatrix(1, 4, 1) : RandomMatrix(12, 4, 1);
    EXPECT_NEAR(m->Loss(input, 1), std::log(3.0), 1e-12) << ArchitectureName(a);
  }
}

TEST(ModelGradients, EntropyDnn) {
  auto m = CreateModel(TinyConfig(Architecture::kEntropyDnn));
  ExpectModelGradients(*m, RandomMatrix(1, 4, 2), 0);
}

TEST(ModelGradients, IBlstm) {
  auto m = CreateModel(TinyConfig(Architecture::kIBlstm));
  ExpectModelGradients(*m, RandomMatrix(8, 4, 2), 2);
}

TEST(ModelGradients, HgruShortAndLong) {
  ModelConfig c = TinyConfig(Architecture::kHgru);
  auto m = CreateModel(c);
  ExpectModelGradients(*m, RandomMatrix(12, 4, 3), 1);
  c.head_threshold_s = 0.05;
  auto l = CreateModel(c);
  ExpectModelGradients(*l, RandomMatrix(12, 4, 4), 1);
}

TEST(ModelGradients, Xvector) {
  auto m = CreateModel(TinyConfig(Architecture::kXvector));
  ExpectModelGradients(*m, RandomMatrix(10, 4, 5), 0);
}

TEST(ModelGradients, XBlstmE2e) {
  ModelConfig c = TinyConfig(Architecture::kXBlstmE2e);
  auto m = CreateModel(c);
  ExpectModelGradients(*m, RandomMatrix(12, 4, 6), 2);
}

TEST(Models, PredictionsAreDistributions) {
  for (Architecture a : {Architecture::kIBlstm, Architecture::kHgru, Architecture::kXBlstmE2e}) {
    auto m = CreateModel(TinyConfig(a));
    RandomizeParameters(m->params(), 1);
    for (int t : {12, 20, 33}) {
      Prediction p = m->Predict(RandomMatrix(t, 4, t));
      EXPECT_NEAR(p.posteriors.sum(), 1.0, 1e-12);
      EXPECT_GT(p.posteriors.minCoeff(), 0.0);
      ASSERT_FALSE(p.attention.empty());
      double s = 0;
      for (double w : p.attention) {
        EXPECT_GT(w, 0.0);
        s += w;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Models, SingleSegmentGetsFullAttention) {
  auto m = CreateModel(TinyConfig(Architecture::kIBlstm));
  RandomizeParameters(m->params(), 2);
  Prediction p = m->Predict(RandomMatrix(1, 4, 1));
  ASSERT_EQ(p.attention.size(), 1u);
  EXPECT_EQ(p.attention[0], 1.0);
}

TEST(Models, BlstmCropIsFixedLength) {
  ModelConfig c = TinyConfig(Architecture::kIBlstm);
  c.seg_hop = 20;
  c.crop_s = 2.0;  // 10 positions at a 200 ms hop
  SequenceClassifier m(c);
  EXPECT_EQ(m.CropRows(), 10);
  nn::Rng rng(1);
  EXPECT_EQ(m.Crop(RandomMatrix(41, 4, 1), rng).rows(), 10);
  EXPECT_EQ(m.Crop(RandomMatrix(6, 4, 1), rng).rows(), 6);
}

TEST(Hgru, WindowCounts) {
  HgruShape s = HgruWindowCounts(1000, 20, 10, 10);
  EXPECT_EQ(s.layer1, 99);
  EXPECT_EQ(s.layer2, 10);
  s = HgruWindowCounts(20, 20, 10, 10);
  EXPECT_EQ(s.layer1, 1);
  EXPECT_EQ(s.layer2, 1);
  EXPECT_THROW(HgruWindowCounts(19, 20, 10, 10), Error);
}

TEST(Hgru, WindowCountsMatchLayerOutputs) {
  ModelConfig c = TinyConfig(Architecture::kHgru);
  Hgru m(c);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    int t = std::uniform_int_distribution<int>(4, 60)(rng);
    nn::Graph g(false);
    auto [l1, l2] = m.Layers12(g, g.Constant(RandomMatrix(t, 4, trial)));
    HgruShape s = HgruWindowCounts(t, 4, 2, 2);
    EXPECT_EQ(l1.rows(), s.layer1) << t;
    EXPECT_EQ(l2.rows(), s.layer2) << t;
    EXPECT_EQ(m.Predict(RandomMatrix(t, 4, trial)).attention.size(),
              static_cast<std::size_t>(s.layer2));
  }
}

TEST(Hgru, DurationRouting) {
  Hgru m(ModelConfig::Preset(Architecture::kHgru, "desk"));
  EXPECT_EQ(m.RouteHead(300), Head::kShort);
  EXPECT_EQ(m.RouteHead(500), Head::kShort);
  EXPECT_EQ(m.RouteHead(501), Head::kLong);
  EXPECT_EQ(m.RouteHead(1000), Head::kLong);
}

TEST(E2e, ZeroStepsMatchCascade) {
  ModelConfig xc = TinyConfig(Architecture::kXvector);
  XvectorNet xv(xc);
  RandomizeParameters(xv.params(), 1);
  ModelConfig bc = TinyConfig(Architecture::kXBlstm);
  bc.input_dim = xc.xvector_dim;
  SequenceClassifier xb(bc);
  RandomizeParameters(xb.params(), 2);
  XBlstmE2e e2e(TinyConfig(Architecture::kXBlstmE2e));
  e2e.InitFrom(xv, xb);
  for (int t : {12, 25}) {
    Matrix frames = RandomMatrix(t, 4, t);
    Prediction cascade = xb.Predict(xv.SegmentXvectors(frames));
    Prediction joint = e2e.Predict(frames);
    EXPECT_LT((cascade.posteriors - joint.posteriors).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_EQ(cascade.attention.size(), joint.attention.size());
  }
}

TEST(E2e, InitFromRejectsMismatch) {
  ModelConfig xc = TinyConfig(Architecture::kXvector);
  XvectorNet xv(xc);
  ModelConfig bc = TinyConfig(Architecture::kXBlstm);
  bc.input_dim = xc.xvector_dim;
  bc.lstm_cells = 5;
  SequenceClassifier xb(bc);
  XBlstmE2e e2e(TinyConfig(Architecture::kXBlstmE2e));
  EXPECT_THROW(e2e.InitFrom(xv, xb), Error);
}

TEST(Training, DnnLearnsSeparableClasses) {
  ModelConfig c = TinyConfig(Architecture::kEntropyDnn);
  c.input_dim = 2;
  auto m = CreateModel(c);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 0.3);
  std::vector<Example> ex;
  std::vector<Matrix> inputs;
  for (int i = 0; i < 300; ++i) {
    int l = i % 3;
    Matrix x(1, 2);
    x << std::cos(2.1 * l) * 2 + normal(rng), std::sin(2.1 * l) * 2 + normal(rng);
    ex.push_back({x, l});
    inputs.push_back(x);
  }
  m->FitInputNormalization(inputs);
  TrainOptions o = TrainOptions::FromModel(c);
  o.lr = 1e-2;
  TrainResult r = TrainModel(*m, ex, o);
  EXPECT_GE(ExampleAccuracy(*m, ex), 0.97);
  EXPECT_LT(MeanLoss(*m, ex), 0.2);
  EXPECT_GE(r.best_epoch, 0);
  EXPECT_EQ(static_cast<int>(r.val_losses.size()), r.epochs_run);
}

TEST(Training, DeterministicInSeed) {
  ModelConfig c = TinyConfig(Architecture::kIBlstm);
  std::vector<Example> ex;
  for (int i = 0; i < 20; ++i) ex.push_back({RandomMatrix(6, 4, i), i % 3});
  auto a = CreateModel(c), b = CreateModel(c);
  TrainOptions o = TrainOptions::FromModel(c);
  o.max_epochs = 2;
  TrainResult ra = TrainModel(*a, ex, o), rb = TrainModel(*b, ex, o);
  ASSERT_EQ(ra.log.size(), rb.log.size());
  for (std::size_t i = 0; i < ra.log.size(); ++i) EXPECT_EQ(ra.log[i].loss, rb.log[i].loss);
  EXPECT_EQ(a->Predict(ex[0].input).posteriors, b->Predict(ex[0].input).posteriors);
}

TEST(Training, RejectsBadLabels) {
  auto m = CreateModel(TinyConfig(Architecture::kEntropyDnn));
  std::vector<Example> ex = {{RandomMatrix(1, 4, 1), 3}, {RandomMatrix(1, 4, 2), 0}};
  EXPECT_THROW(TrainModel(*m, ex, TrainOptions{}), Error);
}

TEST(Models, SaveLoadRoundTrip) {
  auto dir = std::filesystem::temp_directory_path() / "relid-model-io";
  std::filesystem::remove_all(dir);
  for (Architecture a : {Architecture::kIBlstm, Architecture::kHgru}) {
    auto m = CreateModel(TinyConfig(a));
    RandomizeParameters(m->params(), 7);
    std::string path = (dir / ArchitectureName(a)).string();
    m->Save(path, {{1, 0.5}, {2, 0.25}});
    auto back = LoadModel(path);
    EXPECT_EQ(back->config().architecture, a);
    Matrix x = RandomMatrix(16, 4, 3);
    EXPECT_EQ(back->Predict(x).posteriors, m->Predict(x).posteriors);
    auto log = ReadTrainLog(path + "/train_log.csv");
    ASSERT_EQ(log.size(), 2u);
    EXPECT_EQ(log[1].step, 2);
    EXPECT_EQ(log[1].loss, 0.25);
  }
}

TEST(Models, LoadMissingDirectoryFails) {
  try {
    LoadModel("/nonexistent/relid-model");
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingArtifact);
  }
}

TEST(Models, InputShapeChecks) {
  auto m = CreateModel(TinyConfig(Architecture::kIBlstm));
  EXPECT_THROW(m->Predict(RandomMatrix(5, 3, 1)), Error);
  auto h = CreateModel(TinyConfig(Architecture::kHgru));
  EXPECT_THROW(h->Predict(RandomMatrix(3, 4, 1)), Error);
}

TEST(Models, ArchitectureNames) {
  for (const char *n : {"entropy_dnn", "i_blstm", "x_blstm", "hgru", "xvector", "x_blstm_e2e"})
    EXPECT_EQ(ArchitectureName(ParseArchitecture(n)), n);
  EXPECT_THROW(ParseArchitecture("cnn"), Error);
}

}  // namespace
}  // namespace relid
