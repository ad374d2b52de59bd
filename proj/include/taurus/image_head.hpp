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
#include <vector>

#include "json.hpp"
#include "taurus/artifact.hpp"
#include "taurus/backbone.hpp"
#include "taurus/eval_report.hpp"
#include "taurus/ingest.hpp"
#include "taurus/taxonomy.hpp"

namespace taurus {

struct HeadHyperParams {
  double learning_rate = 2.0;
  int epochs = 200;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

struct HeadTrainingInfo {
  int epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // after each epoch; not persisted
};

/// Linear softmax classifier over frozen backbone features.
struct HeadModel {
  LabelSpace space;
  BackboneSpec backbone;
  Eigen::MatrixXd weights;  // feature_dim x n_classes
  Eigen::RowVectorXd bias;  // n_classes
  HeadTrainingInfo training;
  double threshold = kDefaultThreshold;

  TaskId task() const noexcept { return space.task(); }
  int feature_dim() const noexcept { return static_cast<int>(weights.rows()); }

  static HeadModel zeros(const LabelSpace& space, const BackboneSpec& backbone);
};

struct HeadLoss {
  double loss = 0.0;
  Eigen::MatrixXd grad_weights;
  Eigen::RowVectorXd grad_bias;
};

/// Mean softmax cross-entropy plus (l2 / 2) * ||W||^2, with its gradient.
HeadLoss head_loss(const HeadModel& head, const Eigen::MatrixXd& features,
                   std::span<const std::size_t> labels, double l2);

/// Rows of `features` become rows of the matrix. Throws data errors on ragged
/// or non-finite input.
Eigen::MatrixXd feature_matrix(const std::vector<std::vector<float>>& features);

/// Full-batch gradient descent from zero weights. Deterministic; the stored
/// weights are rounded to float32 and final_loss is measured after rounding.
HeadModel train_head(const std::vector<std::vector<float>>& features,
                     const std::vector<std::size_t>& labels, const LabelSpace& space,
                     const HeadHyperParams& hp,
                     const BackboneSpec& backbone = default_image_backbone());

Distribution head_distribution(const HeadModel& head, std::span<const float> features);
Prediction predict_features(const HeadModel& head, std::span<const float> features);

/// preprocess -> embed -> affine -> softmax -> top1.
Prediction predict_image(const HeadModel& head, const Backbone& backbone,
                         std::span<const std::uint8_t> image_bytes);

EvalReport evaluate(const HeadModel& head, const Backbone& backbone, const Manifest& manifest);

/// Tensors "head.W" (feature_dim x n_classes) and "head.b" (n_classes).
void save_head(const HeadModel& head, const std::filesystem::path& dir);
HeadModel load_head(const std::filesystem::path& dir);
HeadModel head_from_artifact(const Artifact& artifact);

}  // namespace taurus
