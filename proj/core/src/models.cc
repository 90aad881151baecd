// core/src/models.cc

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

#include "relid/models.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "relid/tvm.h"

namespace relid {

namespace {

const char *const kArchNames[] = {"entropy_dnn", "i_blstm", "x_blstm",
                                  "hgru",        "xvector", "x_blstm_e2e"};

std::string JoinInts(const std::vector<int> &v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> ParseInts(const std::string &text, char sep, const std::string &key) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
        ++used;
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception &) {
      Fail(ErrorKind::kConfig, "bad integer list for " + key + ": '" + text + "'");
    }
  }
  return out;
}

std::string FormatOffsets(const std::vector<std::vector<int>> &offsets) {
  std::string out;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (i) out += ';';
    out += JoinInts(offsets[i], ',');
  }
  return out;
}

std::vector<std::vector<int>> ParseOffsets(const std::string &text) {
  std::vector<std::vector<int>> out;
  std::stringstream ss(text);
  std::string layer;
  while (std::getline(ss, layer, ';')) out.push_back(ParseInts(layer, ',', "tdnn_offsets"));
  return out;
}

std::string FormatDouble(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int SecondsToFrames(double s, int hop_ms) {
  return static_cast<int>(std::lround(s * 1000.0 / hop_ms));
}

// Random contiguous crop of [min_rows, max_rows] rows (clipped to the input).
Matrix RandomCrop(const Matrix &input, int min_rows, int max_rows, nn::Rng &rng) {
  const int t = static_cast<int>(input.rows());
  max_rows = std::min(max_rows, t);
  min_rows = std::min(min_rows, max_rows);
  int len = std::uniform_int_distribution<int>(min_rows, max_rows)(rng);
  int start = std::uniform_int_distribution<int>(0, t - len)(rng);
  return input.middleRows(start, len);
}

}  // namespace

Architecture ParseArchitecture(const std::string &name) {
  for (int i = 0; i < 6; ++i)
    if (name == kArchNames[i]) return static_cast<Architecture>(i);
  Fail(ErrorKind::kConfig, "unknown architecture '" + name + "'");
}

std::string ArchitectureName(Architecture arch) {
  return kArchNames[static_cast<int>(arch)];
}

std::string HeadName(Head head) {
  switch (head) {
    case Head::kShort: return "short";
    case Head::kLong: return "long";
    default: return "none";
  }
}

ModelConfig ModelConfig::Preset(Architecture arch, const std::string &preset) {
  ModelConfig c;
  c.architecture = arch;
  bool feature_input = arch == Architecture::kHgru || arch == Architecture::kXvector ||
                       arch == Architecture::kXBlstmE2e;
  if (preset == "desk") {
    c.input_dim = feature_input ? 20 : (arch == Architecture::kXBlstm ? 64 : 50);
  } else if (preset == "paper") {
    c.input_dim = feature_input ? 80 : (arch == Architecture::kXBlstm ? 512 : 500);
    c.dnn_hidden = {1024, 1024, 1024};
    c.lstm_cells = 256;
    c.fc_dim = 512;
    c.hgru_dims = {256, 512, 512};
    c.tdnn_dim = 512;
    c.xvector_dim = 512;
  } else {
    Fail(ErrorKind::kConfig, "unknown preset '" + preset + "' (expected desk or paper)");
  }
  return c;
}

std::set<std::string> ModelConfig::Keys() {
  return {"architecture",   "num_languages",     "input_dim",
          "frame_hop_ms",   "dnn_hidden",        "lstm_cells",
          "lstm_layers",    "fc_dim",            "crop_s",
          "hgru_dims",      "hgru_window",       "hgru_hop",
          "hgru_chunk",     "head_threshold_s",  "hgru_crop_min_s",
          "hgru_crop_max_s", "tdnn_dim",         "xvector_crop_min_s",
          "xvector_crop_max_s", "tdnn_offsets",  "xvector_dim",
          "seg_win",        "seg_hop",           "lr",
          "batch_size",     "max_epochs",        "patience",
          "val_fraction",   "clip_norm",         "e2e_lr_scale",
          "model_seed"};
}

ModelConfig ModelConfig::FromConfig(const KeyValueConfig &cfg, const ModelConfig &base) {
  ModelConfig c = base;
  if (cfg.Has("architecture"))
    c.architecture = ParseArchitecture(cfg.GetString("architecture", ""));
  auto get_int = [&](const char *key, int def) {
    return static_cast<int>(cfg.GetInt(key, def));
  };
  c.num_languages = get_int("num_languages", c.num_languages);
  c.input_dim = get_int("input_dim", c.input_dim);
  c.frame_hop_ms = get_int("frame_hop_ms", c.frame_hop_ms);
  if (cfg.Has("dnn_hidden"))
    c.dnn_hidden = ParseInts(cfg.GetString("dnn_hidden", ""), ',', "dnn_hidden");
  c.lstm_cells = get_int("lstm_cells", c.lstm_cells);
  c.lstm_layers = get_int("lstm_layers", c.lstm_layers);
  c.fc_dim = get_int("fc_dim", c.fc_dim);
  c.crop_s = cfg.GetDouble("crop_s", c.crop_s);
  if (cfg.Has("hgru_dims"))
    c.hgru_dims = ParseInts(cfg.GetString("hgru_dims", ""), ',', "hgru_dims");
  c.hgru_window = get_int("hgru_window", c.hgru_window);
  c.hgru_hop = get_int("hgru_hop", c.hgru_hop);
  c.hgru_chunk = get_int("hgru_chunk", c.hgru_chunk);
  c.head_threshold_s = cfg.GetDouble("head_threshold_s", c.head_threshold_s);
  c.hgru_crop_min_s = cfg.GetDouble("hgru_crop_min_s", c.hgru_crop_min_s);
  c.hgru_crop_max_s = cfg.GetDouble("hgru_crop_max_s", c.hgru_crop_max_s);
  c.tdnn_dim = get_int("tdnn_dim", c.tdnn_dim);
  c.xvector_crop_min_s = cfg.GetDouble("xvector_crop_min_s", c.xvector_crop_min_s);
  c.xvector_crop_max_s = cfg.GetDouble("xvector_crop_max_s", c.xvector_crop_max_s);
  if (cfg.Has("tdnn_offsets")) c.tdnn_offsets = ParseOffsets(cfg.GetString("tdnn_offsets", ""));
  c.xvector_dim = get_int("xvector_dim", c.xvector_dim);
  c.seg_win = get_int("seg_win", c.seg_win);
  c.seg_hop = get_int("seg_hop", c.seg_hop);
  c.lr = cfg.GetDouble("lr", c.lr);
  c.batch_size = get_int("batch_size", c.batch_size);
  c.max_epochs = get_int("max_epochs", c.max_epochs);
  c.patience = get_int("patience", c.patience);
  c.val_fraction = cfg.GetDouble("val_fraction", c.val_fraction);
  c.clip_norm = cfg.GetDouble("clip_norm", c.clip_norm);
  c.e2e_lr_scale = cfg.GetDouble("e2e_lr_scale", c.e2e_lr_scale);
  c.seed = static_cast<std::uint64_t>(cfg.GetInt("model_seed", static_cast<long>(c.seed)));
  c.Validate();
  return c;
}

KeyValueConfig ModelConfig::ToConfig() const {
  KeyValueConfig k;
  k.Set("architecture", ArchitectureName(architecture));
  k.Set("num_languages", std::to_string(num_languages));
  k.Set("input_dim", std::to_string(input_dim));
  k.Set("frame_hop_ms", std::to_string(frame_hop_ms));
  k.Set("dnn_hidden", JoinInts(dnn_hidden, ','));
  k.Set("lstm_cells", std::to_string(lstm_cells));
  k.Set("lstm_layers", std::to_string(lstm_layers));
  k.Set("fc_dim", std::to_string(fc_dim));
  k.Set("crop_s", FormatDouble(crop_s));
  k.Set("hgru_dims", JoinInts(hgru_dims, ','));
  k.Set("hgru_window", std::to_string(hgru_window));
  k.Set("hgru_hop", std::to_string(hgru_hop));
  k.Set("hgru_chunk", std::to_string(hgru_chunk));
  k.Set("head_threshold_s", FormatDouble(head_threshold_s));
  k.Set("hgru_crop_min_s", FormatDouble(hgru_crop_min_s));
  k.Set("hgru_crop_max_s", FormatDouble(hgru_crop_max_s));
  k.Set("tdnn_dim", std::to_string(tdnn_dim));
  k.Set("xvector_crop_min_s", FormatDouble(xvector_crop_min_s));
  k.Set("xvector_crop_max_s", FormatDouble(xvector_crop_max_s));
  k.Set("tdnn_offsets", FormatOffsets(tdnn_offsets));
  k.Set("xvector_dim", std::to_string(xvector_dim));
  k.Set("seg_win", std::to_string(seg_win));
  k.Set("seg_hop", std::to_string(seg_hop));
  k.Set("lr", FormatDouble(lr));
  k.Set("batch_size", std::to_string(batch_size));
  k.Set("max_epochs", std::to_string(max_epochs));
  k.Set("patience", std::to_string(patience));
  k.Set("val_fraction", FormatDouble(val_fraction));
  k.Set("clip_norm", FormatDouble(clip_norm));
  k.Set("e2e_lr_scale", FormatDouble(e2e_lr_scale));
  k.Set("model_seed", std::to_string(seed));
  return k;
}

void ModelConfig::Validate() const {
  auto need = [](bool ok, const std::string &what) {
    Require(ok, ErrorKind::kConfig, "model config: " + what);
  };
  need(num_languages >= 2, "num_languages must be >= 2");
  need(input_dim >= 1, "input_dim must be positive");
  need(frame_hop_ms >= 1, "frame_hop_ms must be positive");
  need(!dnn_hidden.empty(), "dnn_hidden is empty");
  for (int h : dnn_hidden) need(h >= 1, "dnn_hidden sizes must be positive");
  need(lstm_cells >= 1 && lstm_layers >= 1 && fc_dim >= 1, "BLSTM sizes must be positive");
  need(crop_s > 0, "crop_s must be positive");
  need(hgru_dims.size() == 3, "hgru_dims needs three sizes");
  for (int h : hgru_dims) need(h >= 1, "hgru_dims must be positive");
  need(hgru_window >= 1 && hgru_hop >= 1 && hgru_chunk >= 1, "HGRU windows must be positive");
  need(head_threshold_s > 0, "head_threshold_s must be positive");
  need(hgru_crop_min_s > 0 && hgru_crop_min_s <= hgru_crop_max_s, "bad HGRU crop range");
  need(xvector_crop_min_s > 0 && xvector_crop_min_s <= xvector_crop_max_s,
       "bad x-vector crop range");
  need(tdnn_dim >= 1 && xvector_dim >= 1, "x-vector sizes must be positive");
  need(!tdnn_offsets.empty(), "tdnn_offsets is empty");
  for (const auto &o : tdnn_offsets) need(!o.empty(), "empty TDNN offset list");
  need(seg_win >= 1 && seg_hop >= 1, "segment window and hop must be positive");
  need(lr > 0 && batch_size >= 1 && max_epochs >= 0 && patience >= 1, "bad optimizer settings");
  need(val_fraction >= 0 && val_fraction < 1, "val_fraction must be in [0, 1)");
  need(clip_norm > 0 && e2e_lr_scale > 0, "clip_norm and e2e_lr_scale must be positive");
}

// ---------------------------------------------------------------------------

Matrix Model::Crop(const Matrix &input, nn::Rng &) const { return input; }

void Model::FitInputNormalization(const std::vector<Matrix> &) {}

void Model::CheckInput(const Matrix &input) const {
  Require(input.cols() == config_.input_dim, ErrorKind::kDimensionMismatch,
          ArchitectureName(config_.architecture) + " expects rows of dim " +
              std::to_string(config_.input_dim) + ", got " + std::to_string(input.cols()));
  Require(input.rows() >= MinInputRows(), ErrorKind::kInvalidArgument,
          ArchitectureName(config_.architecture) + " needs at least " +
              std::to_string(MinInputRows()) + " input rows, got " +
              std::to_string(input.rows()));
  Require(input.allFinite(), ErrorKind::kNumerical, "non-finite model input");
}

void Model::AddInputNormalization(int dim) {
  params_.Add("input.shift", 1, dim);
  params_.Add("input.scale", 1, dim).value.setOnes();
}

Matrix Model::Normalize(const Matrix &input) const {
  const RowVector shift = params_.Find("input.shift")->value;
  const RowVector scale = params_.Find("input.scale")->value;
  return (input.rowwise() - shift).array().rowwise() * scale.array();
}

nn::Var Model::Normalize(nn::Graph &g, nn::Var input) const {
  const Matrix &shift = params_.Find("input.shift")->value;
  Matrix scale = params_.Find("input.scale")->value.replicate(input.rows(), 1);
  return nn::Mul(nn::Sub(input, g.Constant(shift)), g.Constant(std::move(scale)));
}

namespace {

void FitNormalization(nn::ParameterStore &params, const std::vector<Matrix> &inputs) {
  Require(!inputs.empty(), ErrorKind::kInvalidArgument, "no inputs to normalize");
  const Eigen::Index dim = inputs[0].cols();
  RowVector sum = RowVector::Zero(dim), sq = RowVector::Zero(dim);
  double n = 0;
  for (const Matrix &m : inputs) {
    Require(m.cols() == dim, ErrorKind::kDimensionMismatch, "ragged normalization inputs");
    sum += m.colwise().sum();
    sq += m.array().square().matrix().colwise().sum();
    n += static_cast<double>(m.rows());
  }
  RowVector mean = sum / n;
  RowVector var = (sq / n).array() - mean.array().square();
  params.Get("input.shift").value = mean;
  params.Get("input.scale").value =
      var.array().max(1e-8).sqrt().inverse().matrix();
}

}  // namespace

Prediction Model::Predict(const Matrix &input) const {
  CheckInput(input);
  nn::Graph g(false);
  ForwardResult fr = Forward(g, input);
  Prediction p;
  p.posteriors = nn::Softmax(fr.logits.value().transpose());
  p.head = fr.head;
  if (fr.attention.valid()) {
    const Matrix &a = fr.attention.value();
    p.attention.assign(a.data(), a.data() + a.size());
  }
  return p;
}

double Model::Loss(const Matrix &input, int label) const {
  CheckInput(input);
  Require(label >= 0 && label < config_.num_languages, ErrorKind::kInvalidArgument,
          "label " + std::to_string(label) + " out of range");
  nn::Graph g(false);
  return nn::SoftmaxXentValue(Forward(g, input).logits.value(), label);
}

void Model::Save(const std::string &dir, const std::vector<TrainLogEntry> &log) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  Require(!ec, ErrorKind::kIo, "cannot create model directory " + dir);
  {
    std::ofstream os(fs::path(dir) / "model.conf");
    Require(os.good(), ErrorKind::kIo, "cannot write " + dir + "/model.conf");
    os << config_.ToConfig().ToString();
  }
  {
    std::ofstream os(fs::path(dir) / "model.rnet", std::ios::binary);
    Require(os.good(), ErrorKind::kIo, "cannot write " + dir + "/model.rnet");
    params_.Write(os);
    Require(os.good(), ErrorKind::kIo, "write failed: " + dir + "/model.rnet");
  }
  std::ofstream os(fs::path(dir) / "train_log.csv");
  Require(os.good(), ErrorKind::kIo, "cannot write " + dir + "/train_log.csv");
  os << "step,loss\n";
  os.precision(17);
  for (const auto &e : log) os << e.step << ',' << e.loss << '\n';
}

std::unique_ptr<Model> CreateModel(const ModelConfig &config) {
  config.Validate();
  switch (config.architecture) {
    case Architecture::kEntropyDnn: return std::make_unique<EntropyDnn>(config);
    case Architecture::kIBlstm:
    case Architecture::kXBlstm: return std::make_unique<SequenceClassifier>(config);
    case Architecture::kHgru: return std::make_unique<Hgru>(config);
    case Architecture::kXvector: return std::make_unique<XvectorNet>(config);
    case Architecture::kXBlstmE2e: return std::make_unique<XBlstmE2e>(config);
  }
  Fail(ErrorKind::kConfig, "unknown architecture");
}

std::unique_ptr<Model> LoadModel(const std::string &dir) {
  namespace fs = std::filesystem;
  fs::path conf = fs::path(dir) / "model.conf", net = fs::path(dir) / "model.rnet";
  Require(fs::exists(conf) && fs::exists(net), ErrorKind::kMissingArtifact,
          "model directory " + dir + " lacks model.conf or model.rnet");
  KeyValueConfig kv = KeyValueConfig::Load(conf.string());
  kv.RejectUnknown(ModelConfig::Keys());
  ModelConfig base = ModelConfig::Preset(ParseArchitecture(kv.GetString("architecture", "")),
                                         "desk");
  auto model = CreateModel(ModelConfig::FromConfig(kv, base));
  std::ifstream is(net, std::ios::binary);
  model->params().Read(is);
  return model;
}

std::vector<TrainLogEntry> ReadTrainLog(const std::string &path) {
  std::ifstream is(path);
  Require(is.good(), ErrorKind::kMissingArtifact, "cannot open " + path);
  std::string line;
  std::getline(is, line);
  Require(line == "step,loss", ErrorKind::kFormat, "bad training log header in " + path);
  std::vector<TrainLogEntry> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    Require(comma != std::string::npos, ErrorKind::kFormat, "bad training log row");
    out.push_back({std::stol(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  return out;
}

// ---------------------------------------------------------------------------

EntropyDnn::EntropyDnn(ModelConfig config) : Model(std::move(config)) {
  nn::Rng rng(config_.seed);
  AddInputNormalization(config_.input_dim);
  int in = config_.input_dim;
  for (std::size_t i = 0; i < config_.dnn_hidden.size(); ++i) {
    hidden_.emplace_back(params_, "hidden" + std::to_string(i), in, config_.dnn_hidden[i], rng);
    in = config_.dnn_hidden[i];
  }
  out_ = nn::Dense(params_, "out", in, config_.num_languages, rng, true);
}

void EntropyDnn::FitInputNormalization(const std::vector<Matrix> &inputs) {
  FitNormalization(params_, inputs);
}

ForwardResult EntropyDnn::Forward(nn::Graph &g, const Matrix &input) const {
  Require(input.rows() == 1, ErrorKind::kDimensionMismatch,
          "entropy DNN takes a single embedding row");
  nn::Var x = g.Constant(Normalize(input));
  for (const auto &layer : hidden_) x = nn::Relu(layer.Apply(g, x));
  return {out_.Apply(g, x), {}, Head::kNone};
}

BlstmAttentionNet::BlstmAttentionNet(nn::ParameterStore &store, const std::string &prefix,
                                     const ModelConfig &config, nn::Rng &rng) {
  int in = config.input_dim;
  for (int l = 0; l < config.lstm_layers; ++l) {
    std::string name = prefix + "lstm" + std::to_string(l);
    fwd_.emplace_back(store, name + "f", in, config.lstm_cells, rng);
    bwd_.emplace_back(store, name + "b", in, config.lstm_cells, rng);
    in = 2 * config.lstm_cells;
  }
  attention_ = nn::Attention(store, prefix + "attn", in, rng);
  fc_ = nn::Dense(store, prefix + "fc", in, config.fc_dim, rng);
  out_ = nn::Dense(store, prefix + "out", config.fc_dim, config.num_languages, rng, true);
}

ForwardResult BlstmAttentionNet::Forward(nn::Graph &g, nn::Var seq) const {
  Require(seq.rows() >= 1, ErrorKind::kInvalidArgument, "empty embedding sequence");
  nn::Var h = seq;
  for (std::size_t l = 0; l < fwd_.size(); ++l) h = nn::Bidirectional(g, fwd_[l], bwd_[l], h);
  nn::AttentionOutput att = attention_.Apply(g, h);
  nn::Var z = nn::Relu(fc_.Apply(g, att.embedding));
  return {out_.Apply(g, z), att.weights, Head::kNone};
}

SequenceClassifier::SequenceClassifier(ModelConfig config) : Model(std::move(config)) {
  Require(config_.architecture == Architecture::kIBlstm ||
              config_.architecture == Architecture::kXBlstm,
          ErrorKind::kConfig, "SequenceClassifier needs i_blstm or x_blstm");
  nn::Rng rng(config_.seed);
  AddInputNormalization(config_.input_dim);
  net_ = BlstmAttentionNet(params_, "seq.", config_, rng);
}

void SequenceClassifier::FitInputNormalization(const std::vector<Matrix> &inputs) {
  FitNormalization(params_, inputs);
}

int SequenceClassifier::CropRows() const {
  return NumSegmentWindows(SecondsToFrames(config_.crop_s, config_.frame_hop_ms),
                           config_.seg_win, config_.seg_hop);
}

Matrix SequenceClassifier::Crop(const Matrix &input, nn::Rng &rng) const {
  int rows = CropRows();
  return RandomCrop(input, rows, rows, rng);
}

ForwardResult SequenceClassifier::Forward(nn::Graph &g, const Matrix &input) const {
  return net_.Forward(g, g.Constant(Normalize(input)));
}

// ---------------------------------------------------------------------------

HgruShape HgruWindowCounts(int num_frames, int window, int hop, int chunk) {
  Require(window >= 1 && hop >= 1 && chunk >= 1, ErrorKind::kInvalidArgument,
          "HGRU window sizes must be positive");
  Require(num_frames >= window, ErrorKind::kInvalidArgument,
          "utterance of " + std::to_string(num_frames) +
              " frames is shorter than one layer-1 window of " + std::to_string(window));
  HgruShape s;
  s.layer1 = (num_frames - window) / hop + 1;
  s.layer2 = (s.layer1 + chunk - 1) / chunk;
  return s;
}

Hgru::Hgru(ModelConfig config) : Model(std::move(config)) {
  nn::Rng rng(config_.seed);
  const auto &d = config_.hgru_dims;
  gru1_ = nn::Gru(params_, "gru1", config_.input_dim, d[0], rng);
  gru2_ = nn::Gru(params_, "gru2", d[0], d[1], rng);
  gru3f_ = nn::Gru(params_, "gru3f", d[1], d[2], rng);
  gru3b_ = nn::Gru(params_, "gru3b", d[1], d[2], rng);
  attention_ = nn::Attention(params_, "attn", 2 * d[2], rng);
  fc_ = nn::Dense(params_, "fc", 2 * d[2], config_.fc_dim, rng);
  short_ = nn::Dense(params_, "head_short", config_.fc_dim, config_.num_languages, rng, true);
  long_ = nn::Dense(params_, "head_long", config_.fc_dim, config_.num_languages, rng, true);
}

Head Hgru::RouteHead(int num_frames) const {
  double seconds = num_frames * config_.frame_hop_ms / 1000.0;
  return seconds <= config_.head_threshold_s + 1e-9 ? Head::kShort : Head::kLong;
}

namespace {

// Runs `gru` over many equal-length subsequences at once. starts[j] is the
// first row of subsequence j in the projected input xw; the final state of
// each is returned, one row per subsequence.
nn::Var GruFinalStates(nn::Graph &g, const nn::Gru &gru, nn::Var xw,
                       const std::vector<int> &starts, int length, int stride) {
  nn::Var h = g.Constant(Matrix::Zero(static_cast<Eigen::Index>(starts.size()), gru.Hidden()));
  for (int k = 0; k < length; ++k) {
    std::vector<int> rows(starts.size());
    for (std::size_t j = 0; j < starts.size(); ++j) rows[j] = starts[j] + k * stride;
    h = gru.StepProjected(g, nn::GatherRows(xw, std::move(rows)), h);
  }
  return h;
}

}  // namespace

std::pair<nn::Var, nn::Var> Hgru::Layers12(nn::Graph &g, nn::Var frames) const {
  const int t = static_cast<int>(frames.rows());
  HgruShape shape =
      HgruWindowCounts(t, config_.hgru_window, config_.hgru_hop, config_.hgru_chunk);
  // Layer 1: the GRU restarts on every window; windows are batched.
  std::vector<int> starts(static_cast<std::size_t>(shape.layer1));
  for (int j = 0; j < shape.layer1; ++j) starts[j] = j * config_.hgru_hop;
  nn::Var l1 = GruFinalStates(g, gru1_, gru1_.Project(g, frames), starts,
                              config_.hgru_window, 1);
  // Layer 2: the GRU restarts on every chunk of layer-1 outputs; full chunks
  // are batched and a shorter final chunk runs on its own.
  nn::Var xw2 = gru2_.Project(g, l1);
  const int chunk = config_.hgru_chunk;
  const int full = shape.layer1 / chunk;
  const int tail = shape.layer1 - full * chunk;
  std::vector<nn::Var> parts;
  if (full > 0) {
    std::vector<int> cs(static_cast<std::size_t>(full));
    for (int c = 0; c < full; ++c) cs[c] = c * chunk;
    parts.push_back(GruFinalStates(g, gru2_, xw2, cs, chunk, 1));
  }
  if (tail > 0) parts.push_back(GruFinalStates(g, gru2_, xw2, {full * chunk}, tail, 1));
  return {l1, nn::ConcatRows(parts)};
}

ForwardResult Hgru::Forward(nn::Graph &g, const Matrix &input) const {
  nn::Var frames = g.Constant(input);
  nn::Var l2 = Layers12(g, frames).second;
  nn::Var l3 = nn::Bidirectional(g, gru3f_, gru3b_, l2);
  nn::AttentionOutput att = attention_.Apply(g, l3);
  nn::Var z = nn::Relu(fc_.Apply(g, att.embedding));
  Head head = RouteHead(static_cast<int>(input.rows()));
  const nn::Dense &out = head == Head::kShort ? short_ : long_;
  return {out.Apply(g, z), att.weights, head};
}

Matrix Hgru::Crop(const Matrix &input, nn::Rng &rng) const {
  return RandomCrop(input, SecondsToFrames(config_.hgru_crop_min_s, config_.frame_hop_ms),
                    SecondsToFrames(config_.hgru_crop_max_s, config_.frame_hop_ms), rng);
}

// ---------------------------------------------------------------------------

XvectorTrunk::XvectorTrunk(nn::ParameterStore &store, const std::string &prefix,
                           const ModelConfig &config, nn::Rng &rng) {
  int in = config.input_dim;
  for (std::size_t i = 0; i < config.tdnn_offsets.size(); ++i) {
    tdnn_.emplace_back(store, prefix + "tdnn" + std::to_string(i + 1), in, config.tdnn_dim,
                       config.tdnn_offsets[i], rng);
    in = config.tdnn_dim;
  }
  fc1_ = nn::Dense(store, prefix + "fc1", 2 * in, config.xvector_dim, rng);
}

int XvectorTrunk::Context() const {
  int c = 1;
  for (const auto &t : tdnn_) c += t.Span() - 1;
  return c;
}

nn::Var XvectorTrunk::Frames(nn::Graph &g, nn::Var frames) const {
  nn::Var h = frames;
  for (const auto &t : tdnn_) h = t.Apply(g, h);
  return h;
}

nn::Var XvectorTrunk::Embed(nn::Graph &g, nn::Var frame_level, int begin, int count) const {
  return fc1_.Apply(g, nn::StatsPool(nn::SliceRows(frame_level, begin, count)));
}

nn::Var XvectorTrunk::SegmentEmbeddings(nn::Graph &g, nn::Var frames, int win,
                                        int hop) const {
  const int t = static_cast<int>(frames.rows());
  const int ctx = Context();
  Require(t >= ctx, ErrorKind::kInvalidArgument,
          "sequence of " + std::to_string(t) + " frames is shorter than the TDNN context " +
              std::to_string(ctx));
  // TDNN layers have no padding, so window [s, s + win) of the input maps to
  // frame-level rows [s, s + win - ctx + 1) of the whole-sequence output.
  nn::Var fl = Frames(g, frames);
  const int n = NumSegmentWindows(t, win, hop);
  const int count = std::min(win, t) - ctx + 1;
  Require(count >= 1, ErrorKind::kInvalidArgument, "segment window shorter than TDNN context");
  std::vector<nn::Var> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows.push_back(Embed(g, fl, i * hop, count));
  return nn::ConcatRows(rows);
}

XvectorNet::XvectorNet(ModelConfig config) : Model(std::move(config)) {
  nn::Rng rng(config_.seed);
  trunk_ = XvectorTrunk(params_, "", config_, rng);
  fc2_ = nn::Dense(params_, "fc2", config_.xvector_dim, config_.xvector_dim, rng);
  out_ = nn::Dense(params_, "out", config_.xvector_dim, config_.num_languages, rng, true);
}

ForwardResult XvectorNet::Forward(nn::Graph &g, const Matrix &input) const {
  nn::Var fl = trunk_.Frames(g, g.Constant(input));
  nn::Var x = trunk_.Embed(g, fl, 0, static_cast<int>(fl.rows()));
  nn::Var h = nn::Relu(fc2_.Apply(g, nn::Relu(x)));
  return {out_.Apply(g, h), {}, Head::kNone};
}

Matrix XvectorNet::Crop(const Matrix &input, nn::Rng &rng) const {
  return RandomCrop(input, SecondsToFrames(config_.xvector_crop_min_s, config_.frame_hop_ms),
                    SecondsToFrames(config_.xvector_crop_max_s, config_.frame_hop_ms), rng);
}

Vector XvectorNet::ExtractXvector(const Matrix &frames) const {
  CheckInput(frames);
  nn::Graph g(false);
  nn::Var fl = trunk_.Frames(g, g.Constant(frames));
  return trunk_.Embed(g, fl, 0, static_cast<int>(fl.rows())).value().transpose();
}

Matrix XvectorNet::SegmentXvectors(const Matrix &frames) const {
  CheckInput(frames);
  nn::Graph g(false);
  return trunk_.SegmentEmbeddings(g, g.Constant(frames), config_.seg_win, config_.seg_hop)
      .value();
}

XBlstmE2e::XBlstmE2e(ModelConfig config) : Model(std::move(config)) {
  nn::Rng rng(config_.seed);
  trunk_ = XvectorTrunk(params_, "xvec.", config_, rng);
  AddInputNormalization(config_.xvector_dim);
  ModelConfig seq = config_;
  seq.input_dim = config_.xvector_dim;
  net_ = BlstmAttentionNet(params_, "seq.", seq, rng);
}

void XBlstmE2e::InitFrom(const XvectorNet &xvector, const SequenceClassifier &xblstm) {
  Require(xblstm.config().architecture == Architecture::kXBlstm, ErrorKind::kDimensionMismatch,
          "end-to-end init needs an x_blstm classifier");
  Require(xblstm.config().input_dim == config_.xvector_dim, ErrorKind::kDimensionMismatch,
          "x_blstm input dim differs from the x-vector dim");
  for (std::size_t i = 0; i < config_.tdnn_offsets.size(); ++i) {
    std::string name = "tdnn" + std::to_string(i + 1);
    params_.CopyPrefixFrom(xvector.params(), name + ".", "xvec." + name + ".");
  }
  params_.CopyPrefixFrom(xvector.params(), "fc1.", "xvec.fc1.");
  params_.CopyPrefixFrom(xblstm.params(), "seq.", "seq.");
  params_.CopyPrefixFrom(xblstm.params(), "input.", "input.");
}

ForwardResult XBlstmE2e::Forward(nn::Graph &g, const Matrix &input) const {
  nn::Var seg = trunk_.SegmentEmbeddings(g, g.Constant(input), config_.seg_win,
                                         config_.seg_hop);
  return net_.Forward(g, Normalize(g, seg));
}

Matrix XBlstmE2e::Crop(const Matrix &input, nn::Rng &rng) const {
  int frames = SecondsToFrames(config_.crop_s, config_.frame_hop_ms);
  return RandomCrop(input, frames, frames, rng);
}

}  // namespace relid
