// core/include/relid/models.h

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

#ifndef RELID_MODELS_H_
#define RELID_MODELS_H_

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "relid/common.h"
#include "relid/config.h"
#include "relid/nn-graph.h"
#include "relid/nn-layers.h"

namespace relid {

enum class Architecture { kEntropyDnn, kIBlstm, kXBlstm, kHgru, kXvector, kXBlstmE2e };

Architecture ParseArchitecture(const std::string &name);
std::string ArchitectureName(Architecture arch);

struct ModelConfig {
  Architecture architecture = Architecture::kIBlstm;
  int num_languages = 3;
  // Width of one input row: i-vector / x-vector dim for the DNN and the
  // BLSTMs, feature dim for the HGRU, x-vector and end-to-end models.
  int input_dim = 50;
  int frame_hop_ms = 10;

  std::vector<int> dnn_hidden = {128, 128, 128};

  int lstm_cells = 64;  // per direction
  int lstm_layers = 2;
  int fc_dim = 128;
  // Training crop for sequence models, in seconds of audio.
  double crop_s = 15.0;

  std::vector<int> hgru_dims = {64, 128, 128};
  int hgru_window = 20;  // frames per layer-1 window
  int hgru_hop = 10;     // frames between layer-1 windows
  int hgru_chunk = 10;   // layer-1 outputs per layer-2 run
  double head_threshold_s = 5.0;
  double hgru_crop_min_s = 3.0;
  double hgru_crop_max_s = 30.0;

  int tdnn_dim = 64;
  double xvector_crop_min_s = 1.0;
  double xvector_crop_max_s = 4.0;
  std::vector<std::vector<int>> tdnn_offsets = {
      {-2, -1, 0, 1, 2}, {-2, 0, 2}, {-3, 0, 3}, {0}, {0}};
  int xvector_dim = 64;

  // Segment windows (frames) of the embedding sequences.
  int seg_win = 100;
  int seg_hop = 20;

  double lr = 1e-3;
  int batch_size = 16;
  int max_epochs = 30;
  int patience = 5;
  double val_fraction = 0.1;
  double clip_norm = 5.0;
  double e2e_lr_scale = 0.1;
  std::uint64_t seed = 1;

  // Desk-scale defaults, or the full-size layer widths with preset "paper".
  static ModelConfig Preset(Architecture arch, const std::string &preset);
  // Reads recognized keys from cfg over the preset defaults; keys the model
  // does not own are ignored.
  static ModelConfig FromConfig(const KeyValueConfig &cfg, const ModelConfig &base);
  KeyValueConfig ToConfig() const;
  // Every key FromConfig understands.
  static std::set<std::string> Keys();
  void Validate() const;
};

enum class Head { kNone, kShort, kLong };

std::string HeadName(Head head);

struct ForwardResult {
  nn::Var logits;     // 1 x L
  nn::Var attention;  // T x 1 when the model pools with attention
  Head head = Head::kNone;
};

struct Prediction {
  Vector posteriors;
  std::vector<double> attention;  // empty for models without attention
  Head head = Head::kNone;
};

struct TrainLogEntry {
  long step = 0;
  double loss = 0.0;
};

// A trainable classifier over a row-sequence input (T x input_dim; 1 x dim
// for the entropy DNN). Models own their parameters.
class Model {
 public:
  explicit Model(ModelConfig config) : config_(std::move(config)) {}
  virtual ~Model() = default;
  Model(const Model &) = delete;
  Model &operator=(const Model &) = delete;

  const ModelConfig &config() const { return config_; }
  nn::ParameterStore &params() { return params_; }
  const nn::ParameterStore &params() const { return params_; }

  virtual ForwardResult Forward(nn::Graph &g, const Matrix &input) const = 0;
  // Random training crop; the default keeps the whole input.
  virtual Matrix Crop(const Matrix &input, nn::Rng &rng) const;
  virtual int MinInputRows() const { return 1; }
  // Fits a per-dimension input standardization when the model has one.
  virtual void FitInputNormalization(const std::vector<Matrix> &inputs);

  Prediction Predict(const Matrix &input) const;
  // Cross-entropy of one example without building gradients.
  double Loss(const Matrix &input, int label) const;

  // Directory with model.conf, model.rnet and train_log.csv.
  void Save(const std::string &dir, const std::vector<TrainLogEntry> &log) const;

 protected:
  void CheckInput(const Matrix &input) const;
  // Standardization parameters "input.shift" / "input.scale" (not trained).
  void AddInputNormalization(int dim);
  Matrix Normalize(const Matrix &input) const;
  nn::Var Normalize(nn::Graph &g, nn::Var input) const;

  ModelConfig config_;
  nn::ParameterStore params_;
};

std::unique_ptr<Model> CreateModel(const ModelConfig &config);
std::unique_ptr<Model> LoadModel(const std::string &dir);
std::vector<TrainLogEntry> ReadTrainLog(const std::string &path);

// Feed-forward ReLU network over one segment embedding.
class EntropyDnn : public Model {
 public:
  explicit EntropyDnn(ModelConfig config);
  ForwardResult Forward(nn::Graph &g, const Matrix &input) const override;
  void FitInputNormalization(const std::vector<Matrix> &inputs) override;

 private:
  std::vector<nn::Dense> hidden_;
  nn::Dense out_;
};

// Stacked bidirectional LSTM, attention pooling, one ReLU layer and the
// output layer. Parameters live in a caller-provided store under `prefix`.
class BlstmAttentionNet {
 public:
  BlstmAttentionNet() = default;
  BlstmAttentionNet(nn::ParameterStore &store, const std::string &prefix,
                    const ModelConfig &config, nn::Rng &rng);
  ForwardResult Forward(nn::Graph &g, nn::Var seq) const;

 private:
  std::vector<nn::Lstm> fwd_, bwd_;
  nn::Attention attention_;
  nn::Dense fc_, out_;
};

// i_blstm and x_blstm: sequence classifier over segment embeddings.
class SequenceClassifier : public Model {
 public:
  explicit SequenceClassifier(ModelConfig config);
  ForwardResult Forward(nn::Graph &g, const Matrix &input) const override;
  Matrix Crop(const Matrix &input, nn::Rng &rng) const override;
  void FitInputNormalization(const std::vector<Matrix> &inputs) override;
  // Number of segment positions covering crop_s seconds.
  int CropRows() const;

 private:
  BlstmAttentionNet net_;
};

struct HgruShape {
  int layer1 = 0;  // layer-1 outputs (one per hop)
  int layer2 = 0;  // layer-2 outputs (one per chunk)
};

// floor((T - window) / hop) + 1 layer-1 windows and ceil(layer1 / chunk)
// layer-2 chunks. Fails when T < window.
HgruShape HgruWindowCounts(int num_frames, int window, int hop, int chunk);

// Hierarchical GRU over frames with SHORT and LONG output heads.
class Hgru : public Model {
 public:
  explicit Hgru(ModelConfig config);
  ForwardResult Forward(nn::Graph &g, const Matrix &input) const override;
  Matrix Crop(const Matrix &input, nn::Rng &rng) const override;
  int MinInputRows() const override { return config_.hgru_window; }

  Head RouteHead(int num_frames) const;
  // Layer-1 and layer-2 output sequences, for shape checks.
  std::pair<nn::Var, nn::Var> Layers12(nn::Graph &g, nn::Var frames) const;

 private:
  nn::Gru gru1_, gru2_, gru3f_, gru3b_;
  nn::Attention attention_;
  nn::Dense fc_, short_, long_;
};

// TDNN stack, statistics pooling and the first post-pooling affine layer.
// The pre-activation output of that layer is the x-vector.
class XvectorTrunk {
 public:
  XvectorTrunk() = default;
  XvectorTrunk(nn::ParameterStore &store, const std::string &prefix,
               const ModelConfig &config, nn::Rng &rng);
  // Frame-level TDNN output ((T - context + 1) x tdnn_dim).
  nn::Var Frames(nn::Graph &g, nn::Var frames) const;
  // x-vector of frame-level rows [begin, begin + count).
  nn::Var Embed(nn::Graph &g, nn::Var frame_level, int begin, int count) const;
  // Segment x-vectors of windows [s, s + win) every hop frames of the input
  // (NumSegmentWindows of them), one per row.
  nn::Var SegmentEmbeddings(nn::Graph &g, nn::Var frames, int win, int hop) const;
  // Total context of the TDNN stack in frames.
  int Context() const;

 private:
  std::vector<nn::Tdnn> tdnn_;
  nn::Dense fc1_;
};

class XvectorNet : public Model {
 public:
  explicit XvectorNet(ModelConfig config);
  ForwardResult Forward(nn::Graph &g, const Matrix &input) const override;
  Matrix Crop(const Matrix &input, nn::Rng &rng) const override;
  int MinInputRows() const override { return trunk_.Context(); }

  Vector ExtractXvector(const Matrix &frames) const;
  // One x-vector per seg_win window every seg_hop frames (rows).
  Matrix SegmentXvectors(const Matrix &frames) const;
  const XvectorTrunk &trunk() const { return trunk_; }

 private:
  XvectorTrunk trunk_;
  nn::Dense fc2_, out_;
};

// x-vector trunk feeding segment x-vectors into the BLSTM-attention
// classifier, trained jointly.
class XBlstmE2e : public Model {
 public:
  explicit XBlstmE2e(ModelConfig config);
  ForwardResult Forward(nn::Graph &g, const Matrix &input) const override;
  Matrix Crop(const Matrix &input, nn::Rng &rng) const override;
  int MinInputRows() const override { return trunk_.Context(); }

  // Copies the trunk from a trained x-vector model and the classifier from
  // a trained x_blstm; fails on any architecture mismatch.
  void InitFrom(const XvectorNet &xvector, const SequenceClassifier &xblstm);

 private:
  XvectorTrunk trunk_;
  BlstmAttentionNet net_;
};

}  // namespace relid

#endif  // RELID_MODELS_H_
