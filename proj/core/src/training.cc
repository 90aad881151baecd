// core/src/training.cc

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

#include "relid/training.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace relid {

TrainOptions TrainOptions::FromModel(const ModelConfig &config) {
  TrainOptions o;
  o.lr = config.lr;
  o.batch_size = config.batch_size;
  o.max_epochs = config.max_epochs;
  o.patience = config.patience;
  o.val_fraction = config.val_fraction;
  o.clip_norm = config.clip_norm;
  o.seed = config.seed;
  return o;
}

double MeanLoss(const Model &model, const std::vector<Example> &examples) {
  Require(!examples.empty(), ErrorKind::kInvalidArgument, "no examples");
  double sum = 0.0;
  for (const auto &e : examples) sum += model.Loss(e.input, e.label);
  return sum / static_cast<double>(examples.size());
}

double ExampleAccuracy(const Model &model, const std::vector<Example> &examples) {
  Require(!examples.empty(), ErrorKind::kInvalidArgument, "no examples");
  int correct = 0;
  for (const auto &e : examples) {
    Vector p = model.Predict(e.input).posteriors;
    Eigen::Index best;
    p.maxCoeff(&best);
    correct += best == e.label;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrainResult TrainModel(Model &model, const std::vector<Example> &examples,
                       const TrainOptions &options) {
  Require(!examples.empty(), ErrorKind::kInvalidArgument, "no training examples");
  Require(options.batch_size >= 1 && options.lr > 0 && options.clip_norm > 0,
          ErrorKind::kInvalidArgument, "bad training options");
  const int num_languages = model.config().num_languages;
  for (const auto &e : examples)
    Require(e.label >= 0 && e.label < num_languages, ErrorKind::kInvalidArgument,
            "training label " + std::to_string(e.label) + " out of range");

  nn::Rng rng(options.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t num_val = 0;
  if (options.val_fraction > 0 && examples.size() >= 2)
    num_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(options.val_fraction * static_cast<double>(examples.size())));
  std::vector<Example> val;
  nn::Rng val_rng(options.seed ^ 0x5bd1e995u);
  for (std::size_t i = 0; i < num_val; ++i) {
    const Example &e = examples[order[i]];
    val.push_back({model.Crop(e.input, val_rng), e.label});
  }
  std::vector<std::size_t> train(order.begin() + static_cast<long>(num_val), order.end());

  nn::ParameterStore &params = model.params();
  nn::AdamOptions adam_opts;
  adam_opts.lr = options.lr;
  nn::Adam adam(params, adam_opts);

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_values;
  int since_best = 0;
  long step = 0;
  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    for (std::size_t b = 0; b < train.size(); b += static_cast<std::size_t>(options.batch_size)) {
      std::size_t end = std::min(train.size(), b + static_cast<std::size_t>(options.batch_size));
      const double inv = 1.0 / static_cast<double>(end - b);
      params.ZeroGrad();
      double batch_loss = 0.0;
      for (std::size_t i = b; i < end; ++i) {
        const Example &e = examples[train[i]];
        nn::Graph g(true);
        ForwardResult fr = model.Forward(g, model.Crop(e.input, rng));
        nn::Var loss = nn::SoftmaxXent(fr.logits, e.label);
        batch_loss += loss.value()(0, 0) * inv;
        g.Backward(nn::Scale(loss, inv));
      }
      Require(std::isfinite(batch_loss), ErrorKind::kNumerical,
              "training loss became non-finite at step " + std::to_string(step));
      nn::ClipGradNorm(params, options.clip_norm);
      adam.Step();
      result.log.push_back({step++, batch_loss});
    }
    ++result.epochs_run;
    if (val.empty()) continue;
    double v = MeanLoss(model, val);
    result.val_losses.push_back(v);
    if (v < best) {
      best = v;
      result.best_epoch = epoch;
      since_best = 0;
      best_values.clear();
      for (const nn::Parameter *p : params.All()) best_values.push_back(p->value);
    } else if (++since_best >= options.patience) {
      break;
    }
  }
  if (!best_values.empty()) {
    auto all = params.All();
    for (std::size_t i = 0; i < all.size(); ++i) all[i]->value = best_values[i];
  }
  return result;
}

}  // namespace relid
