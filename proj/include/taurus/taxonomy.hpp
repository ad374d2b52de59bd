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

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace taurus {

enum class TaskId { breed, disease_image, behavior_video, age_group, weight_group };

inline constexpr std::array<TaskId, 5> kAllTasks = {
    TaskId::breed, TaskId::disease_image, TaskId::behavior_video,
    TaskId::age_group, TaskId::weight_group};

inline constexpr std::string_view kUnknownLabel = "Unknown";
inline constexpr double kDefaultThreshold = 0.5;

std::string_view to_string(TaskId task) noexcept;
TaskId parse_task(std::string_view name);

/// REST path segment for a task: breed, disease-image, disease-video, age,
/// weight.
std::string_view endpoint_slug(TaskId task) noexcept;
std::optional<TaskId> task_from_slug(std::string_view slug) noexcept;

bool is_video_task(TaskId task) noexcept;

/// Ordered class labels for one task. Index order is the byte-order sort of
/// the label strings. Immutable and cheap to copy.
class LabelSpace {
 public:
  LabelSpace();

  TaskId task() const noexcept { return task_; }
  const std::vector<std::string>& labels() const noexcept { return *labels_; }
  std::size_t size() const noexcept { return labels_->size(); }
  const std::string& operator[](std::size_t i) const { return (*labels_)[i]; }

  std::optional<std::size_t> index_of(std::string_view label) const noexcept;
  bool contains(std::string_view label) const noexcept {
    return index_of(label).has_value();
  }

  friend bool operator==(const LabelSpace& a, const LabelSpace& b) noexcept {
    return a.task_ == b.task_ && *a.labels_ == *b.labels_;
  }

 private:
  friend LabelSpace build_label_space(TaskId, std::vector<std::string>);
  LabelSpace(TaskId task, std::vector<std::string> labels);

  TaskId task_;
  std::shared_ptr<const std::vector<std::string>> labels_;
};

/// Trims, validates, and byte-sorts raw labels. Throws validation errors on
/// an empty list, an empty label, a duplicate, or a missing "Unknown".
LabelSpace build_label_space(TaskId task, std::vector<std::string> raw_labels);

/// The label space each task's models are trained against.
const LabelSpace& canonical_label_space(TaskId task);

struct Distribution {
  std::vector<double> probs;

  bool is_normalized(double tolerance = 1e-6) const noexcept;
};

struct Prediction {
  TaskId task = TaskId::breed;
  LabelSpace space;
  std::string label;
  std::size_t index = 0;
  double confidence = 0.0;
  Distribution distribution;
  bool inconclusive = true;
  double threshold = kDefaultThreshold;
};

/// Argmax with lowest-index tie break; inconclusive when confidence is below
/// the threshold.
Prediction top1(const Distribution& distribution, const LabelSpace& space,
                double threshold = kDefaultThreshold);

/// Integer percent, rounding half up (0.955 -> 96).
int confidence_percent(double fraction) noexcept;

/// Numerically stable softmax (max-subtracted).
std::vector<double> softmax(std::span<const double> logits);

void to_json(nlohmann::json& j, TaskId task);
void from_json(const nlohmann::json& j, TaskId& task);
void to_json(nlohmann::json& j, const LabelSpace& space);
LabelSpace label_space_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const Prediction& prediction);
Prediction prediction_from_json(const nlohmann::json& j);

}  // namespace taurus
