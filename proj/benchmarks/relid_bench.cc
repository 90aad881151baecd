// benchmarks/relid_bench.cc

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

// Micro benchmarks at desk sizes: 64-component UBM over 20-dim features,
// rank-50 TV model, 10 s utterances (1000 frames, 46 one-second segments).

#include <memory>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "relid/bw-stats.h"
#include "relid/eval.h"
#include "relid/models.h"
#include "relid/tvm.h"
#include "relid/ubm.h"

namespace relid {
namespace {

constexpr int kComponents = 64;
constexpr int kDim = 20;
constexpr int kRank = 50;
constexpr int kFrames = 1000;

Matrix Gaussian(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

std::shared_ptr<const DiagonalGmm> DeskUbm() {
  Vector w = Vector::Constant(kComponents, 1.0 / kComponents);
  Matrix vars = Gaussian(kComponents, kDim, 2).array().abs() + 0.5;
  return std::make_shared<const DiagonalGmm>(w, Gaussian(kComponents, kDim, 1), vars);
}

void BM_GmmPosteriors(benchmark::State &state) {
  auto ubm = DeskUbm();
  Matrix x = Gaussian(kFrames, kDim, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ubm->Posteriors(x));
  state.SetItemsProcessed(state.iterations() * kFrames);
}
BENCHMARK(BM_GmmPosteriors);

void BM_AccumulateStats(benchmark::State &state) {
  auto ubm = DeskUbm();
  Matrix x = Gaussian(kFrames, kDim, 4);
  std::vector<double> gamma(kFrames, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(AccumulateStats(*ubm, x, gamma));
  state.SetItemsProcessed(state.iterations() * kFrames);
}
BENCHMARK(BM_AccumulateStats);

void BM_ExtractIvector(benchmark::State &state) {
  auto ubm = DeskUbm();
  TvModel tvm = InitTvModel(ubm, kRank, 5, 1.0);
  BwStats stats = AccumulateStats(*ubm, Gaussian(kFrames, kDim, 6));
  for (auto _ : state) benchmark::DoNotOptimize(tvm.ExtractIvector(stats));
}
BENCHMARK(BM_ExtractIvector);

void BM_IBlstmPredict(benchmark::State &state) {
  ModelConfig c = ModelConfig::Preset(Architecture::kIBlstm, "desk");
  c.num_languages = 3;
  c.input_dim = kRank;
  auto model = CreateModel(c);
  Matrix seq = Gaussian(NumSegmentWindows(kFrames, c.seg_win, c.seg_hop), kRank, 7);
  for (auto _ : state) benchmark::DoNotOptimize(model->Predict(seq));
}
BENCHMARK(BM_IBlstmPredict)->Unit(benchmark::kMillisecond);

void BM_IBlstmTrainStep(benchmark::State &state) {
  ModelConfig c = ModelConfig::Preset(Architecture::kIBlstm, "desk");
  c.num_languages = 3;
  c.input_dim = kRank;
  auto model = CreateModel(c);
  Matrix seq = Gaussian(NumSegmentWindows(kFrames, c.seg_win, c.seg_hop), kRank, 8);
  for (auto _ : state) {
    nn::Graph g;
    nn::Var loss = nn::SoftmaxXent(model->Forward(g, seq).logits, 1);
    g.Backward(loss);
    benchmark::DoNotOptimize(loss.value());
  }
}
BENCHMARK(BM_IBlstmTrainStep)->Unit(benchmark::kMillisecond);

void BM_HgruPredict(benchmark::State &state) {
  ModelConfig c = ModelConfig::Preset(Architecture::kHgru, "desk");
  c.num_languages = 3;
  auto model = CreateModel(c);
  Matrix frames = Gaussian(kFrames, c.input_dim, 9);
  for (auto _ : state) benchmark::DoNotOptimize(model->Predict(frames));
}
BENCHMARK(BM_HgruPredict)->Unit(benchmark::kMillisecond);

void BM_DetectionEer(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  Matrix s = Gaussian(2, n, 10);
  std::vector<double> targets(n), nontargets(n);
  for (int i = 0; i < n; ++i) {
    targets[i] = s(0, i) + 1.0;
    nontargets[i] = s(1, i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(DetectionEer(targets, nontargets));
  state.SetComplexityN(n);
}
BENCHMARK(BM_DetectionEer)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oNLogN);

}  // namespace
}  // namespace relid

BENCHMARK_MAIN();
