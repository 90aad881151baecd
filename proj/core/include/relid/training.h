// core/include/relid/training.h

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

#ifndef RELID_TRAINING_H_
#define RELID_TRAINING_H_

#include <vector>

#include "relid/common.h"
#include "relid/models.h"

namespace relid {

struct Example {
  Matrix input;
  int label = 0;
};

struct TrainOptions {
  double lr = 1e-3;
  int batch_size = 16;
  int max_epochs = 30;
  int patience = 5;
  double val_fraction = 0.1;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  // Optimizer and early-stopping settings of a model config.
  static TrainOptions FromModel(const ModelConfig &config);
};

struct TrainResult {
  std::vector<TrainLogEntry> log;  // mean batch loss per optimizer step
  std::vector<double> val_losses;  // per epoch
  int epochs_run = 0;
  int best_epoch = -1;
};

// Mini-batch Adam on cross-entropy over random crops. A seeded val_fraction
// of the examples is held out (with fixed crops); training stops once the
// validation loss has not improved for `patience` epochs and the best
// parameters are restored. With val_fraction = 0 every epoch runs.
// Deterministic in (options, model init, examples).
TrainResult TrainModel(Model &model, const std::vector<Example> &examples,
                       const TrainOptions &options);

// Mean cross-entropy over examples (whole inputs, no crops).
double MeanLoss(const Model &model, const std::vector<Example> &examples);

// Fraction of examples whose arg-max posterior equals the label.
double ExampleAccuracy(const Model &model, const std::vector<Example> &examples);

}  // namespace relid

#endif  // RELID_TRAINING_H_
