// tools/relid.cc

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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relid/backend.h"
#include "relid/binary-io.h"
#include "relid/bw-stats.h"
#include "relid/config.h"
#include "relid/corpus.h"
#include "relid/eval.h"
#include "relid/models.h"
#include "relid/parallel.h"
#include "relid/pipeline.h"
#include "relid/pipeline-config.h"
#include "relid/training.h"
#include "relid/tvm.h"
#include "relid/ubm.h"

namespace fs = std::filesystem;

namespace relid {
namespace {

const char *const kSets[] = {"train", "test"};

// ---------------------------------------------------------------------------
// Artifact helpers.

fs::path Artifact(const PipelineConfig &p, const std::string &rel) { return p.out / rel; }

fs::path Need(const PipelineConfig &p, const std::string &rel, const std::string &producer) {
  fs::path path = Artifact(p, rel);
  Require(fs::exists(path), ErrorKind::kMissingArtifact,
          "missing " + path.string() + " (run " + producer + " first)");
  return path;
}

void MakeDirs(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  Require(!ec, ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<Utterance> LoadSet(const PipelineConfig &p, const std::string &set) {
  std::string path = p.Manifest(set);
  Require(fs::exists(path), ErrorKind::kMissingArtifact,
          "missing " + path + " (run gen-corpus first)");
  return LoadManifest(path);
}

std::shared_ptr<const DiagonalGmm> LoadUbm(const PipelineConfig &p) {
  return std::make_shared<const DiagonalGmm>(
      DiagonalGmm::Read(Need(p, "ubm.rgmm", "train-ubm").string()));
}

TvModel LoadTvm(const PipelineConfig &p) {
  return TvModel::Read(Need(p, "tvm.rtvm", "train-tvm").string(), LoadUbm(p));
}

std::unique_ptr<Model> LoadTrained(const PipelineConfig &p, Architecture arch) {
  std::string rel = "models/" + ArchitectureName(arch);
  return LoadModel(Need(p, rel + "/model.rnet", "train-model --arch " + ArchitectureName(arch))
                       .parent_path()
                       .string());
}

// Stats archive: "RBWA", count, then per entry an id and the stats record.
constexpr std::string_view kStatsMagic = "RBWA";

void WriteStatsArchive(const fs::path &path, const std::vector<Utterance> &utts,
                       const std::vector<BwStats> &stats) {
  std::ofstream os = io::OpenOut(path.string());
  io::WriteMagic(os, kStatsMagic);
  io::WriteU32(os, static_cast<std::uint32_t>(stats.size()));
  for (std::size_t i = 0; i < stats.size(); ++i) {
    io::WriteString(os, utts[i].id);
    stats[i].Write(os);
  }
  Require(os.good(), ErrorKind::kIo, "write failed: " + path.string());
}

std::vector<BwStats> ReadStatsArchive(const fs::path &path) {
  std::ifstream is = io::OpenIn(path.string());
  io::ExpectMagic(is, kStatsMagic);
  std::uint32_t n = io::ReadU32(is);
  std::vector<BwStats> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    io::ReadString(is);
    out.push_back(BwStats::Read(is));
  }
  return out;
}

void WriteEmbeddingSet(const fs::path &path, const std::vector<Utterance> &utts,
                       const std::vector<Matrix> &values) {
  std::vector<EmbeddingEntry> entries(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i)
    entries[i] = {utts[i].id, utts[i].language, values[i]};
  WriteEmbeddings(path.string(), entries);
}

// Embedding archive rows, checked against the utterance list.
std::vector<Matrix> ReadEmbeddingSet(const PipelineConfig &p, const std::string &rel,
                                     const std::string &producer,
                                     const std::vector<Utterance> &utts) {
  auto entries = ReadEmbeddings(Need(p, rel, producer).string());
  Require(entries.size() == utts.size(), ErrorKind::kDimensionMismatch,
          rel + " has " + std::to_string(entries.size()) + " entries for " +
              std::to_string(utts.size()) + " utterances");
  std::vector<Matrix> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Require(entries[i].id == utts[i].id, ErrorKind::kFormat,
            rel + ": entry " + entries[i].id + " does not match " + utts[i].id);
    out.push_back(std::move(entries[i].value));
  }
  return out;
}

std::vector<Vector> RowsToVectors(const std::vector<Matrix> &ms) {
  std::vector<Vector> out;
  out.reserve(ms.size());
  for (const auto &m : ms) out.push_back(m.row(0).transpose());
  return out;
}

Matrix AsRows(const Vector &v) { return v.transpose(); }

// Frame-level network input: every frame, so attention positions stay
// aligned with the SNR trace.
Matrix FrameInput(const Utterance &u) { return u.features.frames.cast<double>(); }

std::vector<Matrix> FrameInputs(const std::vector<Utterance> &utts) {
  std::vector<Matrix> out(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) out[i] = FrameInput(utts[i]);
  return out;
}

std::vector<std::string> LanguageNames(const std::vector<Utterance> &utts) {
  int max_label = 0;
  for (const auto &u : utts) {
    Require(u.language >= 0, ErrorKind::kInvalidArgument, "utterance " + u.id + " is unlabeled");
    max_label = std::max(max_label, u.language);
  }
  return DefaultLanguageNames(max_label + 1);
}

void SaveBackend(const Backend &b, const fs::path &dir) {
  MakeDirs(dir);
  b.wccn.Write((dir / "wccn.rlt").string());
  b.lda.Write((dir / "lda.rlt").string());
  b.svm.Write((dir / "svm.rsvm").string());
}

Backend LoadBackend(const PipelineConfig &p, const std::string &input) {
  fs::path dir = Need(p, "backend/" + input + "/svm.rsvm", "train-backend --input " + input)
                     .parent_path();
  Backend b;
  b.wccn = LinearTransform::Read((dir / "wccn.rlt").string());
  b.lda = LinearTransform::Read((dir / "lda.rlt").string());
  b.svm = LinearClassifier::Read((dir / "svm.rsvm").string());
  return b;
}

// Utterance-level embedding archive for a backend input kind.
std::string BackendInputArchive(const std::string &input, const std::string &set,
                                std::string *producer) {
  if (input == "ivector") {
    *producer = "extract-ivectors";
    return "ivectors/" + set + ".remb";
  }
  if (input == "rwbw") {
    *producer = "extract-ivectors --kind rwbw";
    return "rwbw/" + set + ".remb";
  }
  if (input == "xvector") {
    *producer = "extract-ivectors --kind xvector";
    return "xvectors/" + set + ".remb";
  }
  Fail(ErrorKind::kConfig, "unknown backend input '" + input +
                               "' (expected ivector, rwbw or xvector)");
}

// Network input sequences of a set for an architecture.
std::vector<Matrix> ModelInputs(const PipelineConfig &p, Architecture arch,
                                const std::string &set, const std::vector<Utterance> &utts) {
  switch (arch) {
    case Architecture::kEntropyDnn:
    case Architecture::kIBlstm:
      return ReadEmbeddingSet(p, "segments/" + set + ".remb", "extract-ivectors", utts);
    case Architecture::kXBlstm:
      return ReadEmbeddingSet(p, "xsegments/" + set + ".remb",
                              "extract-ivectors --kind xvector", utts);
    default:
      return FrameInputs(utts);
  }
}

// ---------------------------------------------------------------------------
// Subcommands.

void GenCorpus(const PipelineConfig &p) {
  fs::path dir = Artifact(p, "corpus");
  for (const std::string set : kSets) {
    CorpusConfig c = p.corpus;
    c.id_prefix = set;
    if (set == "test") c = p.TestCorpus(p.test_noise);
    auto utts = GenerateCorpus(c);
    if (set == "train" && p.augment) {
      auto aug = AugmentWithNoise(utts, p.augment_options);
      utts.insert(utts.end(), aug.begin(), aug.end());
    }
    utts = PreprocessCorpus(utts, p.frontend);
    MakeDirs(dir / set);
    std::vector<ManifestEntry> manifest(utts.size());
    ParallelFor(utts.size(), [&](std::size_t i) {
      std::string rel = set + "/" + utts[i].id + ".rlid";
      WriteFeatures(utts[i], (dir / rel).string());
      manifest[i] = {rel, utts[i].language};
    });
    WriteManifest((dir / (set + ".scp")).string(), manifest);
    std::printf("%s: %zu utterances\n", set.c_str(), utts.size());
  }
}

void TrainUbmStage(const PipelineConfig &p) {
  auto utts = LoadSet(p, "train");
  UbmTrainResult r = TrainUbm(PoolVoicedFrames(utts, p.ubm_stride), p.ubm);
  r.gmm.Write(Artifact(p, "ubm.rgmm").string());
  std::printf("ubm: %d components, log-likelihood %.6g\n", r.gmm.NumComponents(),
              r.log_likelihoods.back());
}

void ExtractStats(const PipelineConfig &p) {
  auto ubm = LoadUbm(p);
  MakeDirs(Artifact(p, "stats"));
  for (const std::string set : kSets) {
    auto utts = LoadSet(p, set);
    std::vector<BwStats> stats(utts.size());
    ParallelFor(utts.size(), [&](std::size_t i) {
      stats[i] = AccumulateStats(*ubm, utts[i].features);
    });
    WriteStatsArchive(Artifact(p, "stats/" + set + ".rbwa"), utts, stats);
    std::printf("%s: %zu stats\n", set.c_str(), stats.size());
  }
}

void TrainTvmStage(const PipelineConfig &p) {
  auto ubm = LoadUbm(p);
  auto stats = ReadStatsArchive(Need(p, "stats/train.rbwa", "extract-stats"));
  TvmTrainResult r = TrainTvm(ubm, stats, p.tvm);
  r.model.Write(Artifact(p, "tvm.rtvm").string());
  std::printf("tvm: rank %d, objective %.6g\n", r.model.Rank(), r.objectives.back());
}

void ExtractIvectorsStage(const PipelineConfig &p, const std::string &kind) {
  for (const std::string set : kSets) {
    auto utts = LoadSet(p, set);
    if (kind == "ivector") {
      TvModel tvm = LoadTvm(p);
      auto stats = ReadStatsArchive(Need(p, "stats/" + set + ".rbwa", "extract-stats"));
      Require(stats.size() == utts.size(), ErrorKind::kDimensionMismatch,
              "stats archive does not match the " + set + " manifest");
      std::vector<Matrix> ivectors(utts.size());
      ParallelFor(utts.size(), [&](std::size_t i) {
        ivectors[i] = AsRows(tvm.ExtractIvector(stats[i]));
      });
      MakeDirs(Artifact(p, "ivectors"));
      MakeDirs(Artifact(p, "segments"));
      WriteEmbeddingSet(Artifact(p, "ivectors/" + set + ".remb"), utts, ivectors);
      WriteEmbeddingSet(Artifact(p, "segments/" + set + ".remb"), utts,
                        SegmentIvectorSequences(tvm, utts, p.seg_win, p.seg_hop));
    } else if (kind == "rwbw") {
      TvModel tvm = LoadTvm(p);
      auto dnn = LoadTrained(p, Architecture::kEntropyDnn);
      auto results = RwbwIvectors(tvm, *dnn, utts, p.Gamma(dnn->config().num_languages));
      std::vector<Matrix> ivectors;
      int fallbacks = 0;
      for (const auto &r : results) {
        ivectors.push_back(AsRows(r.ivector));
        fallbacks += r.fell_back;
      }
      MakeDirs(Artifact(p, "rwbw"));
      WriteEmbeddingSet(Artifact(p, "rwbw/" + set + ".remb"), utts, ivectors);
      std::printf("%s: %d utterances fell back to unit relevance\n", set.c_str(), fallbacks);
    } else if (kind == "xvector") {
      auto model = LoadTrained(p, Architecture::kXvector);
      const auto &xnet = static_cast<const XvectorNet &>(*model);
      std::vector<Matrix> xvectors(utts.size()), sequences(utts.size());
      ParallelFor(utts.size(), [&](std::size_t i) {
        Matrix frames = FrameInput(utts[i]);
        xvectors[i] = AsRows(xnet.ExtractXvector(frames));
        sequences[i] = xnet.SegmentXvectors(frames);
      });
      MakeDirs(Artifact(p, "xvectors"));
      MakeDirs(Artifact(p, "xsegments"));
      WriteEmbeddingSet(Artifact(p, "xvectors/" + set + ".remb"), utts, xvectors);
      WriteEmbeddingSet(Artifact(p, "xsegments/" + set + ".remb"), utts, sequences);
    } else {
      Fail(ErrorKind::kConfig, "unknown embedding kind '" + kind +
                                   "' (expected ivector, rwbw or xvector)");
    }
    std::printf("%s: %s embeddings for %zu utterances\n", set.c_str(), kind.c_str(),
                utts.size());
  }
}

void TrainBackendStage(const PipelineConfig &p, const std::string &input) {
  auto utts = LoadSet(p, "train");
  std::string producer;
  std::string rel = BackendInputArchive(input, "train", &producer);
  auto vectors = RowsToVectors(ReadEmbeddingSet(p, rel, producer, utts));
  Backend b = TrainBackend(vectors, Labels(utts), p.backend);
  SaveBackend(b, Artifact(p, "backend/" + input));
  std::printf("backend %s: %d classes, score scale %.6g\n", input.c_str(),
              b.svm.NumClasses(), b.svm.score_scale);
}

void TrainModelStage(const PipelineConfig &p, const std::string &arch_name) {
  Architecture arch = ParseArchitecture(arch_name);
  auto utts = LoadSet(p, "train");
  auto labels = Labels(utts);
  ModelConfig cfg = p.ForArchitecture(arch);
  cfg.num_languages = static_cast<int>(LanguageNames(utts).size());
  cfg.frame_hop_ms = utts.front().features.hop_ms;

  std::vector<Matrix> inputs = ModelInputs(p, arch, "train", utts);
  std::vector<Example> examples;
  if (arch == Architecture::kEntropyDnn) {
    examples = SegmentExamples(inputs, labels, p.dnn_stride);
  } else {
    for (std::size_t i = 0; i < utts.size(); ++i) examples.push_back({inputs[i], labels[i]});
  }
  Require(!examples.empty(), ErrorKind::kInvalidArgument, "no training examples");
  cfg.input_dim = static_cast<int>(examples.front().input.cols());

  std::unique_ptr<Model> model = CreateModel(cfg);
  TrainOptions options = TrainOptions::FromModel(cfg);
  if (arch == Architecture::kXBlstmE2e) {
    auto xvector = LoadTrained(p, Architecture::kXvector);
    auto xblstm = LoadTrained(p, Architecture::kXBlstm);
    static_cast<XBlstmE2e &>(*model).InitFrom(static_cast<const XvectorNet &>(*xvector),
                                              static_cast<const SequenceClassifier &>(*xblstm));
    options.lr *= cfg.e2e_lr_scale;
  } else {
    std::vector<Matrix> fit_inputs;
    for (const auto &e : examples) fit_inputs.push_back(e.input);
    model->FitInputNormalization(fit_inputs);
  }
  TrainResult r = TrainModel(*model, examples, options);
  fs::path dir = Artifact(p, "models/" + arch_name);
  MakeDirs(dir);
  model->Save(dir.string(), r.log);
  std::printf("model %s: %zu examples, %d epochs, best epoch %d\n", arch_name.c_str(),
              examples.size(), r.epochs_run, r.best_epoch);
}

bool IsBackendSystem(const std::string &system, std::string *input) {
  const std::string suffix = "_svm";
  if (system.size() <= suffix.size() ||
      system.compare(system.size() - suffix.size(), suffix.size(), suffix) != 0)
    return false;
  *input = system.substr(0, system.size() - suffix.size());
  return true;
}

void ScoreStage(const PipelineConfig &p, const std::string &system) {
  auto utts = LoadSet(p, "test");
  auto languages = LanguageNames(utts);
  ScoreSet s;
  std::string input;
  if (IsBackendSystem(system, &input)) {
    Backend b = LoadBackend(p, input);
    std::string producer;
    std::string rel = BackendInputArchive(input, "test", &producer);
    s = BackendScoreSet(b, RowsToVectors(ReadEmbeddingSet(p, rel, producer, utts)), utts,
                        languages);
  } else {
    Architecture arch = ParseArchitecture(system);
    Require(arch != Architecture::kEntropyDnn, ErrorKind::kConfig,
            "entropy_dnn scores segments, not utterances");
    auto model = LoadTrained(p, arch);
    Require(model->config().num_languages == static_cast<int>(languages.size()),
            ErrorKind::kDimensionMismatch, "model and test set disagree on the language count");
    s = ModelScoreSet(*model, ModelInputs(p, arch, "test", utts), utts, languages);
  }
  MakeDirs(Artifact(p, "scores"));
  fs::path path = Artifact(p, "scores/" + system + ".csv");
  WriteScores(s, path.string());
  std::printf("scores: %s (%d trials)\n", path.string().c_str(), s.NumTrials());
}

void EvaluateStage(const PipelineConfig &p, const std::string &system,
                   const std::string &scores_path) {
  fs::path path = scores_path.empty()
                      ? Need(p, "scores/" + system + ".csv", "score --system " + system)
                      : fs::path(scores_path);
  Require(fs::exists(path), ErrorKind::kMissingArtifact, "missing " + path.string());
  ScoreSet s = ReadScores(path.string());
  MetricsReport r = Evaluate(s);
  std::string name = scores_path.empty() ? system : path.stem().string();
  fs::path dir = Artifact(p, "reports");
  MakeDirs(dir);
  {
    std::ofstream os = io::OpenOut((dir / (name + ".report")).string());
    WriteReport(r, os);
  }
  {
    std::ofstream os = io::OpenOut((dir / (name + ".languages.csv")).string());
    WriteLanguageTable(r, os);
  }
  {
    std::ofstream os = io::OpenOut((dir / (name + ".det.csv")).string());
    WriteDetPoints(s, os);
  }
  WriteReport(r, std::cout);
}

void AttnDumpStage(const PipelineConfig &p, const std::string &system) {
  Architecture arch = ParseArchitecture(system);
  Require(arch == Architecture::kIBlstm || arch == Architecture::kXBlstm ||
              arch == Architecture::kHgru || arch == Architecture::kXBlstmE2e,
          ErrorKind::kConfig, system + " has no attention layer");
  auto utts = LoadSet(p, "test");
  auto model = LoadTrained(p, arch);
  auto inputs = ModelInputs(p, arch, "test", utts);
  fs::path dir = Artifact(p, "attn/" + system);
  MakeDirs(dir);
  std::vector<std::string> errors(utts.size());
  ParallelFor(utts.size(), [&](std::size_t i) {
    Prediction pred = model->Predict(inputs[i]);
    auto ranges = AttentionFrameRanges(model->config(), utts[i].features.NumFrames());
    auto rows = AttentionSnrRows(pred.attention, ranges, utts[i]);
    std::ofstream os = io::OpenOut((dir / (utts[i].id + ".csv")).string());
    os << "segment,weight,mean_snr_db\n";
    os.precision(9);
    for (const auto &r : rows) os << r.position << ',' << r.weight << ',' << r.mean_snr_db << '\n';
  });
  std::printf("attention: %zu utterances in %s\n", utts.size(), dir.string().c_str());
}

}  // namespace
}  // namespace relid

int main(int argc, char **argv) {
  using namespace relid;
  CLI::App app{"relid: relevance-weighted language identification pipeline"};
  app.require_subcommand(1);
  std::string config_path, preset = "desk", out = "exp";
  std::string kind = "ivector", input = "ivector", arch, system, scores_path;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "Pipeline config (key=value)")->required();
    sub->add_option("--preset", preset, "Model and front-end sizes")
        ->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--out", out, "Experiment directory");
    return sub;
  };
  add_common(app.add_subcommand("gen-corpus", "Generate and preprocess train/test corpora"));
  add_common(app.add_subcommand("train-ubm", "Train the diagonal GMM UBM"));
  add_common(app.add_subcommand("extract-stats", "Accumulate Baum-Welch statistics"));
  add_common(app.add_subcommand("train-tvm", "Train the total-variability model"));
  add_common(app.add_subcommand("extract-ivectors", "Extract utterance and segment embeddings"))
      ->add_option("--kind", kind, "ivector, rwbw or xvector")
      ->check(CLI::IsMember({"ivector", "rwbw", "xvector"}));
  add_common(app.add_subcommand("train-backend", "Train WCCN/LDA/SVM on utterance embeddings"))
      ->add_option("--input", input, "ivector, rwbw or xvector")
      ->check(CLI::IsMember({"ivector", "rwbw", "xvector"}));
  add_common(app.add_subcommand("train-model", "Train a neural model"))
      ->add_option("--arch", arch, "Architecture")
      ->required();
  add_common(app.add_subcommand("score", "Score the test set"))
      ->add_option("--system", system, "<input>_svm or an architecture name")
      ->required();
  auto *eval = add_common(app.add_subcommand("evaluate", "Accuracy, EER and C_avg of a score file"));
  eval->add_option("--system", system, "System whose scores to evaluate");
  eval->add_option("--scores", scores_path, "Score file (instead of --system)");
  add_common(app.add_subcommand("attn-dump", "Per-utterance attention weights against SNR"))
      ->add_option("--system", system, "Attention-bearing architecture")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::string stage = app.get_subcommands().empty() ? "cli" : app.get_subcommands()[0]->get_name();
    std::fprintf(stderr, "error stage=%s kind=config msg=%s\n", stage.c_str(), e.what());
    return 2;
  }

  const std::string stage = app.get_subcommands()[0]->get_name();
  try {
    PipelineConfig p = PipelineConfig::Load(config_path, preset, out);
    if (stage != "evaluate") MakeDirs(p.out);
    if (stage == "gen-corpus") GenCorpus(p);
    else if (stage == "train-ubm") TrainUbmStage(p);
    else if (stage == "extract-stats") ExtractStats(p);
    else if (stage == "train-tvm") TrainTvmStage(p);
    else if (stage == "extract-ivectors") ExtractIvectorsStage(p, kind);
    else if (stage == "train-backend") TrainBackendStage(p, input);
    else if (stage == "train-model") TrainModelStage(p, arch);
    else if (stage == "score") ScoreStage(p, system);
    else if (stage == "evaluate") {
      Require(!system.empty() || !scores_path.empty(), ErrorKind::kConfig,
              "evaluate needs --system or --scores");
      EvaluateStage(p, system, scores_path);
    } else if (stage == "attn-dump") AttnDumpStage(p, system);
  } catch (const Error &e) {
    std::fprintf(stderr, "error stage=%s kind=%s msg=%s\n", stage.c_str(),
                 std::string(ErrorKindName(e.kind())).c_str(), e.what());
    return 1;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error stage=%s kind=internal msg=%s\n", stage.c_str(), e.what());
    return 1;
  }
  return 0;
}
