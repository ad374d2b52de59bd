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

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "taurus/artifact.hpp"
#include "taurus/backbone.hpp"
#include "taurus/gru.hpp"
#include "taurus/taxonomy.hpp"
#include "taurus/video.hpp"

namespace taurus {

/// Layer sizes for GRU(units1, full sequence) -> GRU(units2, final state) ->
/// dropout -> dense(dense_units, ReLU) -> dense(n_classes, softmax).
struct SequenceHeadConfig {
  int input_dim = kFrameFeatureDim;
  int units1 = 16;
  int units2 = 8;
  int dense_units = 8;
  int n_classes = 5;
  double dropout_rate = 0.4;
};

struct SequenceParams {
  GruLayerParams gru1;
  GruLayerParams gru2;
  Eigen::MatrixXd dense1_W;  // units2 x dense_units
  Eigen::RowVectorXd dense1_b;
  Eigen::MatrixXd dense2_W;  // dense_units x n_classes
  Eigen::RowVectorXd dense2_b;

  static SequenceParams zeros(const SequenceHeadConfig& config);

  template <typename F>
  void for_each_tensor(F&& f) {
    gru1.for_each_tensor("gru1", f);
    gru2.for_each_tensor("gru2", f);
    f(std::string("dense1.W"), dense1_W);
    f(std::string("dense1.b"), dense1_b);
    f(std::string("dense2.W"), dense2_W);
    f(std::string("dense2.b"), dense2_b);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    gru1.for_each_tensor("gru1", f);
    gru2.for_each_tensor("gru2", f);
    f(std::string("dense1.W"), dense1_W);
    f(std::string("dense1.b"), dense1_b);
    f(std::string("dense2.W"), dense2_W);
    f(std::string("dense2.b"), dense2_b);
  }
};

struct SequenceTrainingInfo {
  int epochs = 0;
  double learning_rate = 0.0;
  int batch_size = 0;
  std::uint64_t seed = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch; not persisted
};

struct SequenceHead {
  LabelSpace space;
  BackboneSpec frame_backbone;
  SequenceHeadConfig config;
  SequenceParams params;
  SequenceTrainingInfo training;
  double threshold = kDefaultThreshold;
};

struct LayerParamCounts {
  std::size_t gru1 = 0;
  std::size_t gru2 = 0;
  std::size_t dense1 = 0;
  std::size_t dense2 = 0;
  std::size_t total = 0;
};

/// Parameters drawn uniformly from [-0.05, 0.05] (float32-representable) by
/// a generator seeded with `seed`. config.n_classes is taken from `space`.
SequenceHead make_sequence_head(const LabelSpace& space, SequenceHeadConfig config = {},
                                std::uint64_t seed = 0,
                                const BackboneSpec& frame_backbone = default_frame_backbone());

LayerParamCounts layer_param_counts(const SequenceHead& head);
std::size_t param_count(const SequenceHead& head);

/// Inference: both GRUs run over every step under the mask; dropout is the
/// identity.
Distribution video_distribution(const SequenceHead& head, const FeatureSequence& sequence);
Prediction predict_video(const SequenceHead& head, const FeatureSequence& sequence);

struct LabeledSequence {
  FeatureSequence sequence;
  std::size_t label = 0;
};

struct SequenceHyperParams {
  double learning_rate = 0.01;
  int epochs = 200;
  double dropout_rate = 0.4;
  std::uint64_t seed = 0;
  int batch_size = 8;
};

/// Mean inference-mode cross-entropy over `batch`.
double sequence_loss(const SequenceHead& head, std::span<const LabeledSequence> batch);

/// Mean cross-entropy over `batch` and its gradient, accumulated into
/// `grads` (which must have the head's shapes). With `dropout_rng` null no
/// dropout is applied.
double sequence_loss_and_grad(const SequenceHead& head, std::span<const LabeledSequence> batch,
                              SequenceParams& grads, Rng* dropout_rng = nullptr,
                              double dropout_rate = 0.0);

/// Minibatch Adam over BPTT gradients. Batches are drawn from a per-epoch
/// shuffle and dropout masks from the same seeded stream, so a run is fully
/// determined by (data, hp, config).
SequenceHead train_sequence_head(const std::vector<LabeledSequence>& dataset,
                                 const LabelSpace& space, const SequenceHyperParams& hp,
                                 SequenceHeadConfig config = {},
                                 const BackboneSpec& frame_backbone = default_frame_backbone());

void save_sequence_head(const SequenceHead& head, const std::filesystem::path& dir);
SequenceHead load_sequence_head(const std::filesystem::path& dir);
SequenceHead sequence_head_from_artifact(const Artifact& artifact);

}  // namespace taurus
