// tests/unit/config_test.cc

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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "relid/config.h"
#include "relid/common.h"
#include "relid/models.h"
#include "relid/pipeline-config.h"

namespace relid {
namespace {

TEST(KeyValueConfig, ParsesTrimsAndOverrides) {
  auto c = KeyValueConfig::Parse("# comment\n a = 1 \n\nb=x y\na=2\n");
  EXPECT_EQ(c.GetInt("a", 0), 2);
  EXPECT_EQ(c.GetString("b", ""), "x y");
  EXPECT_EQ(c.GetDouble("missing", 1.5), 1.5);
  EXPECT_FALSE(c.Has("missing"));
}

TEST(KeyValueConfig, TypedGettersValidate) {
  auto c = KeyValueConfig::Parse("n=abc\nb=maybe\nf=1e-3\nlist=5,10, 15\nt=yes\n");
  EXPECT_THROW(c.GetInt("n", 0), Error);
  EXPECT_THROW(c.GetDouble("n", 0), Error);
  EXPECT_THROW(c.GetBool("b", false), Error);
  EXPECT_TRUE(c.GetBool("t", false));
  EXPECT_DOUBLE_EQ(c.GetDouble("f", 0), 1e-3);
  EXPECT_EQ(c.GetDoubleList("list", {}), (std::vector<double>{5, 10, 15}));
}

TEST(KeyValueConfig, MalformedLineFails) {
  try {
    KeyValueConfig::Parse("novalue\n");
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(KeyValueConfig, RejectUnknownNamesKey) {
  auto c = KeyValueConfig::Parse("good=1\nbad=2\n");
  try {
    c.RejectUnknown({"good"});
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
}

TEST(KeyValueConfig, ToStringRoundTrip) {
  auto c = KeyValueConfig::Parse("z=1\na=hello\n");
  auto d = KeyValueConfig::Parse(c.ToString());
  EXPECT_EQ(d.entries(), c.entries());
}

TEST(ModelConfig, PresetsAndRoundTrip) {
  ModelConfig desk = ModelConfig::Preset(Architecture::kIBlstm, "desk");
  EXPECT_EQ(desk.lstm_cells, 64);
  EXPECT_EQ(desk.fc_dim, 128);
  EXPECT_EQ(desk.lr, 1e-3);
  EXPECT_EQ(desk.batch_size, 16);
  EXPECT_EQ(desk.patience, 5);
  EXPECT_EQ(desk.crop_s, 15.0);
  ModelConfig paper = ModelConfig::Preset(Architecture::kIBlstm, "paper");
  EXPECT_EQ(paper.lstm_cells, 256);
  EXPECT_EQ(paper.fc_dim, 512);
  EXPECT_EQ(paper.input_dim, 500);
  ModelConfig paper_dnn = ModelConfig::Preset(Architecture::kEntropyDnn, "paper");
  EXPECT_EQ(paper_dnn.input_dim, 500);
  EXPECT_EQ(paper_dnn.dnn_hidden, (std::vector<int>{1024, 1024, 1024}));
  ModelConfig paper_hgru = ModelConfig::Preset(Architecture::kHgru, "paper");
  EXPECT_EQ(paper_hgru.input_dim, 80);
  EXPECT_EQ(paper_hgru.hgru_dims, (std::vector<int>{256, 512, 512}));
  EXPECT_EQ(ModelConfig::Preset(Architecture::kXBlstm, "paper").input_dim, 512);
  EXPECT_EQ(ModelConfig::Preset(Architecture::kXvector, "paper").xvector_dim, 512);
  EXPECT_THROW(ModelConfig::Preset(Architecture::kIBlstm, "huge"), Error);

  ModelConfig c = desk;
  c.lstm_cells = 7;
  c.tdnn_offsets = {{-1, 0}, {0}};
  c.dnn_hidden = {3, 2};
  ModelConfig back = ModelConfig::FromConfig(c.ToConfig(), ModelConfig::Preset(Architecture::kHgru, "desk"));
  EXPECT_EQ(back.architecture, Architecture::kIBlstm);
  EXPECT_EQ(back.lstm_cells, 7);
  EXPECT_EQ(back.tdnn_offsets, c.tdnn_offsets);
  EXPECT_EQ(back.dnn_hidden, c.dnn_hidden);
  KeyValueConfig kv = c.ToConfig();
  for (const auto &[k, v] : kv.entries()) EXPECT_TRUE(ModelConfig::Keys().count(k)) << k;
}

TEST(ModelConfig, ValidateRejectsNonsense) {
  ModelConfig c = ModelConfig::Preset(Architecture::kHgru, "desk");
  c.num_languages = 1;
  EXPECT_THROW(c.Validate(), Error);
  c = ModelConfig::Preset(Architecture::kHgru, "desk");
  c.lr = 0;
  EXPECT_THROW(c.Validate(), Error);
  c = ModelConfig::Preset(Architecture::kHgru, "desk");
  c.val_fraction = 1.0;
  EXPECT_THROW(c.Validate(), Error);
}

std::string WriteConfig(const std::string &name, const std::string &text) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path.string();
}

TEST(PipelineConfig, LoadsAugmentationAndModelScopes) {
  auto path = WriteConfig("relid_pipeline_config_test.conf",
                          "corpus.seed = 7\n"
                          "augment.snrs_db = -5,0\n"
                          "augment.regions = 2\n"
                          "augment.copies = 3\n"
                          "model.max_epochs = 4\n"
                          "i_blstm.max_epochs = 9\n");
  PipelineConfig p = PipelineConfig::Load(path, "desk", "/tmp/relid-out");
  EXPECT_EQ(p.augment_options.snrs_db, (std::vector<double>{-5.0, 0.0}));
  EXPECT_EQ(p.augment_options.regions, 2);
  EXPECT_EQ(p.augment_options.copies, 3);
  EXPECT_EQ(p.ForArchitecture(Architecture::kIBlstm).max_epochs, 9);
  EXPECT_EQ(p.ForArchitecture(Architecture::kXBlstm).max_epochs, 4);

  CorpusConfig clean = p.TestCorpus(NoiseMode::kClean);
  CorpusConfig noisy = p.TestCorpus(NoiseMode::kPartial);
  EXPECT_EQ(clean.seed, noisy.seed);
  EXPECT_EQ(clean.id_prefix, "test");
  EXPECT_EQ(clean.utts_per_language, p.test_per_language);
  EXPECT_EQ(noisy.noise, NoiseMode::kPartial);
  std::filesystem::remove(path);
}

TEST(PipelineConfig, RejectsUnknownKey) {
  auto path = WriteConfig("relid_pipeline_config_bad.conf", "augment.copy = 2\n");
  EXPECT_THROW(PipelineConfig::Load(path, "desk", "/tmp/relid-out"), Error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace relid
