// Copyright 2026 The Taurus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>

#include "support/fixtures.hpp"
#include "taurus/artifact.hpp"
#include "taurus/error.hpp"
#include "taurus/image_head.hpp"
#include "taurus/rng.hpp"
#include "taurus/sequence_head.hpp"

using namespace taurus;
using fixtures::TempDir;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string load_error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::model_load);
    return e.what();
  }
  ADD_FAILURE() << "no error thrown";
  return {};
}

std::vector<std::vector<float>> random_features(std::size_t n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<float>> out(n, std::vector<float>(static_cast<std::size_t>(dim)));
  for (auto& row : out) {
    for (auto& v : row) v = static_cast<float>(rng.normal());
  }
  return out;
}

HeadModel trained_head(std::uint64_t seed) {
  const LabelSpace& space = canonical_label_space(TaskId::breed);
  const auto features = random_features(30, default_image_backbone().feature_dim, 11);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < features.size(); ++i) labels.push_back(i % space.size());
  HeadHyperParams hp;
  hp.epochs = 15;
  hp.seed = seed;
  return train_head(features, labels, space, hp);
}

SequenceHead trained_sequence_head(std::uint64_t seed) {
  const LabelSpace& space = canonical_label_space(TaskId::behavior_video);
  SequenceHeadConfig cfg;
  cfg.input_dim = 12;
  const auto data = fixtures::separable_sequences(16, space.size(), cfg.input_dim, 2, 6, 8, 0.3, 4);
  SequenceHyperParams hp;
  hp.epochs = 3;
  hp.seed = seed;
  return train_sequence_head(data, space, hp, cfg);
}

}  // namespace

TEST(Artifact, TensorRoundTripIsExact) {
  TempDir tmp;
  Rng rng(1);
  Eigen::MatrixXd m(3, 5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 1e3;
  snap_to_float32(m);
  write_artifact(tmp.path(), {{"kind", "test"}}, {to_tensor_data("m", m)});
  const Artifact a = read_artifact(tmp.path());
  EXPECT_EQ(a.meta.at("schema_version"), kArtifactSchemaVersion);
  EXPECT_EQ(a.meta.at("kind"), "test");
  EXPECT_EQ(matrix_from(a.tensor("m", {3, 5})), m);
  EXPECT_EQ(fs::file_size(tmp / kWeightsBin), 3u * 5u * 4u);
}

TEST(Artifact, WeightsAreLittleEndianFloat32) {
  TempDir tmp;
  Eigen::RowVectorXd v(2);
  v << 1.0, -2.0;
  write_artifact(tmp.path(), nlohmann::json::object(), {to_tensor_data("v", v)});
  const std::vector<std::uint8_t> expected{0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
  EXPECT_EQ(slurp(tmp / kWeightsBin), expected);
}

TEST(Artifact, ShapeMismatchAndMissingTensor) {
  TempDir tmp;
  write_artifact(tmp.path(), nlohmann::json::object(),
                 {to_tensor_data("m", Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2)))});
  const Artifact a = read_artifact(tmp.path());
  EXPECT_NE(load_error_message([&] { a.tensor("m", {2, 3}); }).find("'m'"), std::string::npos);
  EXPECT_NE(load_error_message([&] { a.tensor("q", {2, 2}); }).find("'q'"), std::string::npos);
}

TEST(Artifact, MissingFiles) {
  TempDir tmp;
  load_error_message([&] { read_artifact(tmp / "absent"); });
}

TEST(ImageHeadArtifact, RoundTripIsBitIdentical) {
  TempDir tmp;
  const HeadModel head = trained_head(0);
  save_head(head, tmp / "m");
  const HeadModel back = load_head(tmp / "m");
  EXPECT_EQ(back.space, head.space);
  EXPECT_EQ(back.backbone, head.backbone);
  EXPECT_EQ(back.weights, head.weights);
  EXPECT_EQ(back.bias, head.bias);
  EXPECT_EQ(back.threshold, head.threshold);
  EXPECT_EQ(back.training.epochs, head.training.epochs);
  EXPECT_EQ(back.training.final_loss, head.training.final_loss);
  for (const auto& x : random_features(20, default_image_backbone().feature_dim, 99)) {
    EXPECT_EQ(head_distribution(back, x).probs, head_distribution(head, x).probs);
  }
}

TEST(ImageHeadArtifact, TrainingTwiceGivesIdenticalBytes) {
  TempDir tmp;
  save_head(trained_head(5), tmp / "a");
  save_head(trained_head(5), tmp / "b");
  EXPECT_EQ(slurp(tmp / "a" / kModelJson), slurp(tmp / "b" / kModelJson));
  EXPECT_EQ(slurp(tmp / "a" / kWeightsBin), slurp(tmp / "b" / kWeightsBin));
}

TEST(ImageHeadArtifact, TruncatedWeightsNameTheTensor) {
  TempDir tmp;
  save_head(trained_head(0), tmp / "m");
  const fs::path bin = tmp / "m" / kWeightsBin;
  fs::resize_file(bin, fs::file_size(bin) - 4);
  const std::string msg = load_error_message([&] { load_head(tmp / "m"); });
  EXPECT_NE(msg.find("head.b"), std::string::npos) << msg;
}

TEST(ImageHeadArtifact, TrailingBytesRejected) {
  TempDir tmp;
  save_head(trained_head(0), tmp / "m");
  std::ofstream(tmp / "m" / kWeightsBin, std::ios::binary | std::ios::app) << "xxxx";
  load_error_message([&] { load_head(tmp / "m"); });
}

TEST(ImageHeadArtifact, SchemaVersionChecked) {
  TempDir tmp;
  save_head(trained_head(0), tmp / "m");
  const fs::path json_path = tmp / "m" / kModelJson;
  auto meta = nlohmann::json::parse(slurp(json_path));
  meta["schema_version"] = kArtifactSchemaVersion + 1;
  std::ofstream(json_path, std::ios::trunc) << meta.dump();
  const std::string msg = load_error_message([&] { load_head(tmp / "m"); });
  EXPECT_NE(msg.find("schema_version"), std::string::npos) << msg;
}

TEST(ImageHeadArtifact, WrongKindRejected) {
  TempDir tmp;
  save_sequence_head(make_sequence_head(canonical_label_space(TaskId::behavior_video)), tmp / "m");
  load_error_message([&] { load_head(tmp / "m"); });
}

TEST(ImageHeadArtifact, MalformedJsonRejected) {
  TempDir tmp;
  save_head(trained_head(0), tmp / "m");
  std::ofstream(tmp / "m" / kModelJson, std::ios::trunc) << "{ not json";
  load_error_message([&] { load_head(tmp / "m"); });
}

TEST(SequenceHeadArtifact, RoundTripIsBitIdentical) {
  TempDir tmp;
  const SequenceHead head = trained_sequence_head(2);
  save_sequence_head(head, tmp / "m");
  const SequenceHead back = load_sequence_head(tmp / "m");
  EXPECT_EQ(back.space, head.space);
  EXPECT_EQ(back.frame_backbone, head.frame_backbone);
  EXPECT_EQ(back.config.input_dim, head.config.input_dim);
  EXPECT_EQ(back.config.dropout_rate, head.config.dropout_rate);
  EXPECT_EQ(param_count(back), param_count(head));
  const auto probes = fixtures::separable_sequences(20, head.space.size(), head.config.input_dim,
                                                    1, 8, 8, 1.0, 77);
  for (const auto& p : probes) {
    EXPECT_EQ(video_distribution(back, p.sequence).probs,
              video_distribution(head, p.sequence).probs);
  }
}

TEST(SequenceHeadArtifact, TrainingTwiceGivesIdenticalBytes) {
  TempDir tmp;
  save_sequence_head(trained_sequence_head(8), tmp / "a");
  save_sequence_head(trained_sequence_head(8), tmp / "b");
  EXPECT_EQ(slurp(tmp / "a" / kModelJson), slurp(tmp / "b" / kModelJson));
  EXPECT_EQ(slurp(tmp / "a" / kWeightsBin), slurp(tmp / "b" / kWeightsBin));
}

TEST(SequenceHeadArtifact, TruncatedWeightsNameTheTensor) {
  TempDir tmp;
  save_sequence_head(trained_sequence_head(2), tmp / "m");
  const fs::path bin = tmp / "m" / kWeightsBin;
  fs::resize_file(bin, fs::file_size(bin) / 2);
  const std::string msg = load_error_message([&] { load_sequence_head(tmp / "m"); });
  EXPECT_NE(msg.find("tensor '"), std::string::npos) << msg;
}
