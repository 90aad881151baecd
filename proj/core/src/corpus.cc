// core/src/corpus.cc

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

#include "relid/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "relid/binary-io.h"
#include "relid/parallel.h"

namespace relid {

FeatureSequence FeatureSequence::FromFrames(FeatureMatrix frames, int hop_ms) {
  FeatureSequence f;
  f.voiced.assign(static_cast<std::size_t>(frames.rows()), 1);
  f.frames = std::move(frames);
  f.hop_ms = hop_ms;
  return f;
}

int FeatureSequence::NumVoiced() const {
  int n = 0;
  for (auto v : voiced) n += v ? 1 : 0;
  return n;
}

void FeatureSequence::Validate() const {
  Require(frames.rows() >= 1, ErrorKind::kInvalidArgument,
          "feature sequence has no frames");
  Require(static_cast<Eigen::Index>(voiced.size()) == frames.rows(),
          ErrorKind::kDimensionMismatch, "voicing mask length != frame count");
  Require(frames.allFinite(), ErrorKind::kNumerical, "non-finite feature");
  Require(hop_ms > 0, ErrorKind::kInvalidArgument, "hop_ms must be positive");
}

FeatureSequence FeatureSequence::Slice(int begin, int count) const {
  Require(begin >= 0 && count >= 0 && begin + count <= NumFrames(),
          ErrorKind::kInvalidArgument, "slice out of range");
  FeatureSequence out;
  out.frames = frames.middleRows(begin, count);
  out.hop_ms = hop_ms;
  out.voiced.assign(voiced.begin() + begin, voiced.begin() + begin + count);
  return out;
}

Utterance Utterance::Slice(int begin, int count) const {
  Utterance out;
  out.id = id;
  out.language = language;
  out.features = features.Slice(begin, count);
  if (!snr_trace.empty())
    out.snr_trace.assign(snr_trace.begin() + begin,
                         snr_trace.begin() + begin + count);
  return out;
}

NoiseMode ParseNoiseMode(const std::string &name) {
  if (name == "clean") return NoiseMode::kClean;
  if (name == "full") return NoiseMode::kFull;
  if (name == "partial") return NoiseMode::kPartial;
  Fail(ErrorKind::kConfig, "unknown noise mode: " + name);
}

std::string NoiseModeName(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::kClean: return "clean";
    case NoiseMode::kFull: return "full";
    case NoiseMode::kPartial: return "partial";
  }
  return "clean";
}

void CorpusConfig::Validate() const {
  Require(num_languages >= 2, ErrorKind::kInvalidArgument,
          "corpus needs at least 2 languages");
  Require(utts_per_language >= 1, ErrorKind::kInvalidArgument,
          "utts_per_language must be positive");
  Require(min_duration_s > 0 && max_duration_s >= min_duration_s,
          ErrorKind::kInvalidArgument, "duration range must be positive");
  Require(dim >= 1 && source_components >= 1, ErrorKind::kInvalidArgument,
          "dim and source_components must be positive");
  Require(std::isfinite(snr_db), ErrorKind::kInvalidArgument,
          "snr_db must be finite");
  Require(mean_dwell_frames >= 1.0, ErrorKind::kInvalidArgument,
          "mean_dwell_frames must be >= 1");
}

std::vector<LanguageSource> MakeLanguageSources(const CorpusConfig &config) {
  config.Validate();
  std::mt19937_64 rng(config.seed ^ 0x5a17c0de5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.5, 1.5);
  const int k = config.source_components, d = config.dim;

  Matrix shared_means(k, d), shared_vars(k, d);
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < d; ++j) {
      shared_means(c, j) = config.component_spread * normal(rng);
      shared_vars(c, j) = uniform(rng);
    }

  std::vector<LanguageSource> sources(config.num_languages);
  for (auto &src : sources) {
    src.means = shared_means;
    src.variances = shared_vars;
    src.weights.resize(k);
    for (int c = 0; c < k; ++c) {
      src.weights(c) = std::exp(config.weight_contrast * normal(rng));
      for (int j = 0; j < d; ++j)
        src.means(c, j) += config.language_separation * normal(rng);
    }
    src.weights /= src.weights.sum();
  }
  return sources;
}

namespace {

std::uint64_t StreamSeed(std::uint64_t seed, const std::string &id) {
  return seed ^ io::Fnv1a(id);
}

Utterance GenerateUtterance(const CorpusConfig &config,
                            const LanguageSource &src, int language,
                            const std::string &id) {
  std::mt19937_64 rng(StreamSeed(config.seed, id));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<int> pick(src.weights.data(),
                                       src.weights.data() + src.weights.size());

  const int hop_ms = 10;
  double dur_s = config.min_duration_s +
                 (config.max_duration_s - config.min_duration_s) * unit(rng);
  int num_frames = std::max(1, static_cast<int>(std::lround(dur_s * 1000.0 / hop_ms)));
  const int d = config.dim;

  Vector session(d);
  for (int j = 0; j < d; ++j) session(j) = config.session_std * normal(rng);

  FeatureMatrix frames(num_frames, d);
  double leave = 1.0 / config.mean_dwell_frames;
  int comp = pick(rng);
  int pause_left = 0;
  for (int t = 0; t < num_frames; ++t) {
    if (pause_left == 0 && unit(rng) < config.pause_probability)
      pause_left = 10 + static_cast<int>(unit(rng) * 20);
    if (pause_left > 0) {
      --pause_left;
      for (int j = 0; j < d; ++j)
        frames(t, j) = static_cast<float>(0.1 * normal(rng));
      continue;
    }
    if (unit(rng) < leave) comp = pick(rng);
    for (int j = 0; j < d; ++j)
      frames(t, j) = static_cast<float>(
          src.means(comp, j) + session(j) +
          std::sqrt(src.variances(comp, j)) * normal(rng));
  }

  Utterance utt;
  utt.id = id;
  utt.language = language;
  utt.features = FeatureSequence::FromFrames(std::move(frames), hop_ms);
  utt.snr_trace.assign(num_frames, static_cast<float>(kCleanSnrDb));
  return utt;
}

}  // namespace

std::vector<Utterance> GenerateCorpus(const CorpusConfig &config) {
  config.Validate();
  auto sources = MakeLanguageSources(config);
  const std::size_t per = static_cast<std::size_t>(config.utts_per_language);
  const std::size_t total = per * config.num_languages;
  std::vector<Utterance> corpus(total);
  ParallelFor(total, [&](std::size_t i) {
    int lang = static_cast<int>(i / per);
    std::size_t idx = i % per;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "-l%d-%04zu", lang, idx);
    std::string id = config.id_prefix + buf;
    Utterance utt = GenerateUtterance(config, sources[lang], lang, id);
    int n = utt.features.NumFrames();
    std::uint64_t noise_seed = StreamSeed(config.seed, id + "/noise");
    if (config.noise == NoiseMode::kFull)
      AddNoise(utt, config.snr_db, 0, n, noise_seed);
    else if (config.noise == NoiseMode::kPartial)
      AddNoise(utt, config.snr_db, 0, n / 2, noise_seed);
    corpus[i] = std::move(utt);
  });
  return corpus;
}

void AddNoise(Utterance &utt, double snr_db, int begin, int end,
              std::uint64_t seed) {
  FeatureSequence &f = utt.features;
  const int n = f.NumFrames(), d = f.Dim();
  Require(0 <= begin && begin <= end && end <= n, ErrorKind::kInvalidArgument,
          "noise range out of bounds");
  Require(std::isfinite(snr_db), ErrorKind::kInvalidArgument,
          "snr_db must be finite");
  if (begin == end) return;

  Eigen::MatrixXd x = f.frames.cast<double>();
  Eigen::RowVectorXd mean = x.colwise().mean();
  double speech_var =
      (x.rowwise() - mean).array().square().colwise().sum().mean() / n;
  double noise_std = std::sqrt(speech_var / std::pow(10.0, snr_db / 10.0));

  if (utt.snr_trace.empty())
    utt.snr_trace.assign(n, static_cast<float>(kCleanSnrDb));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_std);
  for (int t = begin; t < end; ++t) {
    double energy = 0.0;
    for (int j = 0; j < d; ++j) {
      double e = normal(rng);
      energy += e * e;
      f.frames(t, j) = static_cast<float>(f.frames(t, j) + e);
    }
    double snr = energy > 0 ? 10.0 * std::log10(d * speech_var / energy)
                            : kCleanSnrDb;
    utt.snr_trace[t] = static_cast<float>(std::min(snr, kCleanSnrDb));
  }
}

FeatureSequence ApplySad(const FeatureSequence &f, double energy_quantile) {
  Require(f.NumFrames() >= 1, ErrorKind::kInvalidArgument,
          "SAD on empty sequence");
  Require(energy_quantile >= 0.0 && energy_quantile < 1.0,
          ErrorKind::kInvalidArgument, "energy quantile must be in [0, 1)");
  const int n = f.NumFrames();
  std::vector<double> energy(n);
  for (int t = 0; t < n; ++t)
    energy[t] = f.frames.row(t).cast<double>().squaredNorm();
  FeatureSequence out = f;
  int k = static_cast<int>(std::ceil(energy_quantile * n)) - 1;
  if (k < 0) {
    out.voiced.assign(n, 1);
    return out;
  }
  std::vector<double> sorted = energy;
  std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
  double threshold = sorted[k];
  for (int t = 0; t < n; ++t) out.voiced[t] = energy[t] > threshold ? 1 : 0;
  return out;
}

FeatureSequence CmvnUtterance(const FeatureSequence &f) {
  f.Validate();
  const int n = f.NumFrames(), d = f.Dim();
  int nv = f.NumVoiced();
  Require(nv > 0, ErrorKind::kInvalidArgument, "CMVN on all-unvoiced input");
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
  Eigen::RowVectorXd sumsq = Eigen::RowVectorXd::Zero(d);
  for (int t = 0; t < n; ++t) {
    if (!f.voiced[t]) continue;
    Eigen::RowVectorXd x = f.frames.row(t).cast<double>();
    sum += x;
    sumsq += x.array().square().matrix();
  }
  Eigen::RowVectorXd mean = sum / nv;
  Eigen::RowVectorXd var =
      (sumsq / nv - mean.array().square().matrix()).cwiseMax(0.0);
  Eigen::RowVectorXd inv_std =
      var.cwiseMax(kCmvnVarianceFloor).cwiseSqrt().cwiseInverse();
  FeatureSequence out = f;
  for (int t = 0; t < n; ++t)
    out.frames.row(t) =
        ((f.frames.row(t).cast<double>() - mean).cwiseProduct(inv_std))
            .cast<float>();
  return out;
}

std::pair<int, int> CmvnWindow(int t, int num_frames, int window_frames) {
  int begin = t - window_frames / 2;
  int end = begin + window_frames;  // exclusive
  return {std::max(0, begin), std::min(num_frames, end)};
}

FeatureSequence CmvnSliding(const FeatureSequence &f, double window_s) {
  f.Validate();
  Require(window_s > 0, ErrorKind::kInvalidArgument, "window must be positive");
  const int n = f.NumFrames(), d = f.Dim();
  int window = std::max(1, static_cast<int>(std::lround(window_s * 1000.0 / f.hop_ms)));

  // Prefix sums over voiced frames.
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n + 1, d);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(n + 1, d);
  std::vector<int> count(n + 1, 0);
  for (int t = 0; t < n; ++t) {
    Eigen::RowVectorXd x = f.frames.row(t).cast<double>();
    bool v = f.voiced[t] != 0;
    sum.row(t + 1) = sum.row(t) + (v ? x : Eigen::RowVectorXd::Zero(d));
    sumsq.row(t + 1) = sumsq.row(t) + (v ? Eigen::RowVectorXd(x.array().square())
                                         : Eigen::RowVectorXd::Zero(d));
    count[t + 1] = count[t] + (v ? 1 : 0);
  }
  FeatureSequence out = f;
  for (int t = 0; t < n; ++t) {
    auto [b, e] = CmvnWindow(t, n, window);
    int c = count[e] - count[b];
    if (c == 0) continue;
    Eigen::RowVectorXd mean = (sum.row(e) - sum.row(b)) / c;
    Eigen::RowVectorXd var =
        ((sumsq.row(e) - sumsq.row(b)) / c - mean.array().square().matrix())
            .cwiseMax(0.0);
    Eigen::RowVectorXd inv_std =
        var.cwiseMax(kCmvnVarianceFloor).cwiseSqrt().cwiseInverse();
    out.frames.row(t) =
        ((f.frames.row(t).cast<double>() - mean).cwiseProduct(inv_std))
            .cast<float>();
  }
  return out;
}

FeatureSequence Cmvn(const FeatureSequence &f, double window_s) {
  return CmvnSliding(CmvnUtterance(f), window_s);
}

namespace {
constexpr std::string_view kFeatMagic = "RLID";
constexpr std::uint16_t kFeatVersion = 1;
}  // namespace

void WriteFeatures(const Utterance &utt, std::ostream &os) {
  const FeatureSequence &f = utt.features;
  f.Validate();
  Require(utt.snr_trace.empty() ||
              static_cast<int>(utt.snr_trace.size()) == f.NumFrames(),
          ErrorKind::kDimensionMismatch, "snr_trace length != frame count");
  Require(utt.language >= -1 && utt.language <= 0x7fff,
          ErrorKind::kInvalidArgument, "label out of range");
  io::WriteMagic(os, kFeatMagic);
  io::WriteU16(os, kFeatVersion);
  io::WriteU32(os, static_cast<std::uint32_t>(f.NumFrames()));
  io::WriteU32(os, static_cast<std::uint32_t>(f.Dim()));
  io::WriteU16(os, static_cast<std::uint16_t>(f.hop_ms));
  io::WriteI16(os, static_cast<std::int16_t>(utt.language));
  for (int t = 0; t < f.NumFrames(); ++t)
    for (int j = 0; j < f.Dim(); ++j) io::WriteF32(os, f.frames(t, j));
  for (auto v : f.voiced) io::WriteU8(os, v ? 1 : 0);
  io::WriteU8(os, utt.snr_trace.empty() ? 0 : 1);
  for (float s : utt.snr_trace) io::WriteF32(os, s);
  if (!os) Fail(ErrorKind::kIo, "write failed");
}

Utterance ReadFeatures(std::istream &is, const std::string &id) {
  io::ExpectMagic(is, kFeatMagic);
  std::uint16_t version = io::ReadU16(is);
  if (version != kFeatVersion)
    Fail(ErrorKind::kFormat, "unsupported feature file version " +
                                 std::to_string(version));
  std::uint32_t n = io::ReadU32(is), d = io::ReadU32(is);
  io::CheckDims(n, d, "feature file");
  Require(n >= 1 && d >= 1, ErrorKind::kFormat, "empty feature matrix");
  Utterance utt;
  utt.id = id;
  utt.features.hop_ms = io::ReadU16(is);
  utt.language = io::ReadI16(is);
  utt.features.frames.resize(n, d);
  is.read(reinterpret_cast<char *>(utt.features.frames.data()),
          static_cast<std::streamsize>(std::size_t{n} * d * sizeof(float)));
  if (is.gcount() != static_cast<std::streamsize>(std::size_t{n} * d * sizeof(float)))
    Fail(ErrorKind::kFormat, "truncated feature data");
  utt.features.voiced.resize(n);
  for (auto &v : utt.features.voiced) {
    std::uint8_t b = io::ReadU8(is);
    Require(b <= 1, ErrorKind::kFormat, "voicing byte must be 0 or 1");
    v = b;
  }
  std::uint8_t has_snr = io::ReadU8(is);
  Require(has_snr <= 1, ErrorKind::kFormat, "bad SNR presence flag");
  if (has_snr) {
    utt.snr_trace.resize(n);
    for (auto &s : utt.snr_trace) s = io::ReadF32(is);
  }
  utt.features.Validate();
  return utt;
}

void WriteFeatures(const Utterance &utt, const std::string &path) {
  auto os = io::OpenOut(path);
  WriteFeatures(utt, os);
}

Utterance ReadFeatures(const std::string &path) {
  auto is = io::OpenIn(path);
  return ReadFeatures(is, std::filesystem::path(path).stem().string());
}

void WriteManifest(const std::string &path,
                   const std::vector<ManifestEntry> &entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write manifest: " + path);
  for (const auto &e : entries) os << e.path << ' ' << e.label << '\n';
}

std::vector<ManifestEntry> ReadManifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kMissingArtifact, "cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    if (!(ls >> e.path >> e.label))
      Fail(ErrorKind::kFormat, path + ":" + std::to_string(lineno) +
                                   ": expected '<path> <label>'");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<Utterance> LoadManifest(const std::string &path) {
  auto entries = ReadManifest(path);
  auto dir = std::filesystem::path(path).parent_path();
  std::vector<Utterance> out(entries.size());
  ParallelFor(entries.size(), [&](std::size_t i) {
    out[i] = ReadFeatures((dir / entries[i].path).string());
    if (out[i].language < 0) out[i].language = entries[i].label;
  });
  return out;
}

}  // namespace relid
