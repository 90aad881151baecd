// core/src/pipeline-config.cc

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

#include "relid/pipeline-config.h"

#include <set>

namespace relid {
namespace {

namespace fs = std::filesystem;

// Model keys the pipeline derives from its artifacts instead of reading them.
const std::set<std::string> kDerivedModelKeys = {
    "architecture", "num_languages", "input_dim", "frame_hop_ms", "seg_win", "seg_hop"};

const std::set<std::string> kPipelineKeys = {
    "corpus.num_languages", "corpus.train_per_language", "corpus.test_per_language",
    "corpus.min_duration_s", "corpus.max_duration_s", "corpus.dim",
    "corpus.source_components", "corpus.test_noise", "corpus.snr_db", "corpus.seed",
    "corpus.component_spread", "corpus.language_separation", "corpus.weight_contrast",
    "corpus.session_std", "corpus.mean_dwell_frames", "corpus.pause_probability",
    "augment.enabled", "augment.min_fraction", "augment.max_fraction", "augment.snrs_db",
    "augment.regions", "augment.copies", "augment.seed",
    "frontend.sad_quantile", "frontend.cmvn_window_s",
    "data.train_manifest", "data.test_manifest",
    "ubm.components", "ubm.iters", "ubm.split_iters", "ubm.frame_stride", "ubm.seed",
    "tvm.rank", "tvm.iters", "tvm.seed", "tvm.init_scale",
    "segments.win", "segments.hop",
    "rwbw.h_min", "rwbw.h_max", "rwbw.block_frames",
    "backend.lda_dim", "backend.svm_c", "backend.svm_epochs", "backend.seed",
    "dnn.segment_stride"};


bool IsModelKey(const std::string &key, std::string *suffix) {
  auto dot = key.find('.');
  if (dot == std::string::npos) return false;
  std::string scope = key.substr(0, dot);
  if (scope != "model") {
    try {
      ParseArchitecture(scope);
    } catch (const Error &) {
      return false;
    }
  }
  *suffix = key.substr(dot + 1);
  return true;
}

}  // namespace

PipelineConfig PipelineConfig::Load(const std::string &path, const std::string &preset,
                                    const std::string &out) {
  Require(fs::exists(path), ErrorKind::kMissingArtifact, "config not found: " + path);
  PipelineConfig p;
  p.kv = KeyValueConfig::Load(path);
  p.preset = preset;
  p.out = out;
  for (const auto &[key, value] : p.kv.entries()) {
    std::string suffix;
    if (kPipelineKeys.count(key)) continue;
    if (IsModelKey(key, &suffix) && ModelConfig::Keys().count(suffix) &&
        !kDerivedModelKeys.count(suffix))
      continue;
    Fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
  }
  if (preset == "paper") {
    p.corpus.dim = 80;
    p.ubm.num_components = 2048;
    p.tvm.rank = 500;
  } else {
    Require(preset == "desk", ErrorKind::kConfig,
            "unknown preset '" + preset + "' (expected desk or paper)");
  }
  const KeyValueConfig &kv = p.kv;
  auto get_int = [&](const char *key, int def) { return static_cast<int>(kv.GetInt(key, def)); };
  auto get_seed = [&](const char *key, std::uint64_t def) {
    return static_cast<std::uint64_t>(kv.GetInt(key, static_cast<long>(def)));
  };
  CorpusConfig &c = p.corpus;
  c.num_languages = get_int("corpus.num_languages", c.num_languages);
  c.utts_per_language = get_int("corpus.train_per_language", 100);
  p.test_per_language = get_int("corpus.test_per_language", p.test_per_language);
  c.min_duration_s = kv.GetDouble("corpus.min_duration_s", c.min_duration_s);
  c.max_duration_s = kv.GetDouble("corpus.max_duration_s", c.max_duration_s);
  c.dim = get_int("corpus.dim", c.dim);
  c.source_components = get_int("corpus.source_components", c.source_components);
  p.test_noise = ParseNoiseMode(kv.GetString("corpus.test_noise", "partial"));
  c.snr_db = kv.GetDouble("corpus.snr_db", 5.0);
  c.seed = get_seed("corpus.seed", c.seed);
  c.component_spread = kv.GetDouble("corpus.component_spread", c.component_spread);
  c.language_separation = kv.GetDouble("corpus.language_separation", c.language_separation);
  c.weight_contrast = kv.GetDouble("corpus.weight_contrast", c.weight_contrast);
  c.session_std = kv.GetDouble("corpus.session_std", c.session_std);
  c.mean_dwell_frames = kv.GetDouble("corpus.mean_dwell_frames", c.mean_dwell_frames);
  c.pause_probability = kv.GetDouble("corpus.pause_probability", c.pause_probability);
  c.Validate();
  Require(p.test_per_language >= 1, ErrorKind::kConfig, "corpus.test_per_language must be >= 1");

  p.augment = kv.GetBool("augment.enabled", p.augment);
  AugmentOptions &a = p.augment_options;
  a.min_fraction = kv.GetDouble("augment.min_fraction", a.min_fraction);
  a.max_fraction = kv.GetDouble("augment.max_fraction", a.max_fraction);
  a.snrs_db = kv.GetDoubleList("augment.snrs_db", a.snrs_db);
  a.regions = static_cast<int>(kv.GetInt("augment.regions", a.regions));
  a.copies = static_cast<int>(kv.GetInt("augment.copies", a.copies));
  a.seed = get_seed("augment.seed", c.seed);

  p.frontend.sad_quantile = kv.GetDouble("frontend.sad_quantile", p.frontend.sad_quantile);
  p.frontend.cmvn_window_s = kv.GetDouble("frontend.cmvn_window_s", p.frontend.cmvn_window_s);

  p.train_manifest = kv.GetString("data.train_manifest", (p.out / "corpus/train.scp").string());
  p.test_manifest = kv.GetString("data.test_manifest", (p.out / "corpus/test.scp").string());
  for (const char *key : {"data.train_manifest", "data.test_manifest"})
    if (kv.Has(key))
      Require(fs::exists(kv.GetString(key, "")), ErrorKind::kMissingArtifact,
              std::string(key) + " does not exist: " + kv.GetString(key, ""));

  p.ubm.num_components = get_int("ubm.components", p.ubm.num_components);
  p.ubm.iters = get_int("ubm.iters", 6);
  p.ubm.split_iters = get_int("ubm.split_iters", p.ubm.split_iters);
  p.ubm.seed = get_seed("ubm.seed", 1);
  p.ubm_stride = get_int("ubm.frame_stride", p.ubm_stride);
  p.tvm.rank = get_int("tvm.rank", p.tvm.rank);
  p.tvm.iters = get_int("tvm.iters", 6);
  p.tvm.seed = get_seed("tvm.seed", 1);
  p.tvm.init_scale = kv.GetDouble("tvm.init_scale", p.tvm.init_scale);
  p.seg_win = get_int("segments.win", p.seg_win);
  p.seg_hop = get_int("segments.hop", p.seg_hop);
  p.backend.lda_dim = get_int("backend.lda_dim", p.backend.lda_dim);
  p.backend.svm.c_reg = kv.GetDouble("backend.svm_c", p.backend.svm.c_reg);
  p.backend.svm.epochs = get_int("backend.svm_epochs", p.backend.svm.epochs);
  p.backend.svm.seed = get_seed("backend.seed", 1);
  p.dnn_stride = get_int("dnn.segment_stride", p.dnn_stride);
  Require(p.ubm_stride >= 1 && p.seg_win >= 1 && p.seg_hop >= 1 && p.dnn_stride >= 1,
          ErrorKind::kConfig, "strides and segment sizes must be positive");
  return p;
}

CorpusConfig PipelineConfig::TestCorpus(NoiseMode noise) const {
  CorpusConfig c = corpus;
  c.id_prefix = "test";
  c.utts_per_language = test_per_language;
  c.noise = noise;
  return c;
}

ModelConfig PipelineConfig::ForArchitecture(Architecture arch) const {
  KeyValueConfig scoped;
  const std::string arch_scope = ArchitectureName(arch) + ".";
  for (const std::string &scope : {std::string("model."), arch_scope})
    for (const auto &[key, value] : kv.entries())
      if (key.rfind(scope, 0) == 0) scoped.Set(key.substr(scope.size()), value);
  ModelConfig m = ModelConfig::FromConfig(scoped, ModelConfig::Preset(arch, preset));
  m.seg_win = seg_win;
  m.seg_hop = seg_hop;
  return m;
}

GammaConfig PipelineConfig::Gamma(int num_languages) const {
  GammaConfig g = GammaConfig::Default(num_languages);
  g.h_min = kv.GetDouble("rwbw.h_min", g.h_min);
  g.h_max = kv.GetDouble("rwbw.h_max", g.h_max);
  g.block_frames = static_cast<int>(kv.GetInt("rwbw.block_frames", g.block_frames));
  g.Validate(num_languages);
  return g;
}

}  // namespace relid
