// core/include/relid/pipeline-config.h

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

#ifndef RELID_PIPELINE_CONFIG_H_
#define RELID_PIPELINE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "relid/backend.h"
#include "relid/config.h"
#include "relid/corpus.h"
#include "relid/models.h"
#include "relid/pipeline.h"
#include "relid/tvm.h"
#include "relid/ubm.h"

namespace relid {

// Everything an experiment directory is built from: one key=value file plus
// a preset. Unknown keys are rejected at load time.
struct PipelineConfig {
  KeyValueConfig kv;
  std::string preset = "desk";
  std::filesystem::path out;

  CorpusConfig corpus;
  int test_per_language = 34;
  NoiseMode test_noise = NoiseMode::kPartial;
  bool augment = true;
  AugmentOptions augment_options;
  FrontendOptions frontend;
  std::string train_manifest, test_manifest;
  UbmTrainOptions ubm;
  int ubm_stride = 4;
  TvmTrainOptions tvm;
  int seg_win = 100, seg_hop = 20;
  BackendOptions backend;
  int dnn_stride = 5;

  static PipelineConfig Load(const std::string &path, const std::string &preset,
                             const std::string &out);

  // Test-set corpus config for a noise condition (same speech in every condition).
  CorpusConfig TestCorpus(NoiseMode noise) const;
  // Model config: preset, then "model.*", then "<arch>.*" overrides.
  ModelConfig ForArchitecture(Architecture arch) const;
  GammaConfig Gamma(int num_languages) const;
  std::string Manifest(const std::string &set) const {
    return set == "train" ? train_manifest : test_manifest;
  }
};

}  // namespace relid

#endif  // RELID_PIPELINE_CONFIG_H_
