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

#include "taurus/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "taurus/error.hpp"

namespace taurus {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::string_view to_string(TaskId task) noexcept {
  switch (task) {
    case TaskId::breed: return "breed";
    case TaskId::disease_image: return "disease_image";
    case TaskId::behavior_video: return "behavior_video";
    case TaskId::age_group: return "age_group";
    case TaskId::weight_group: return "weight_group";
  }
  return "breed";
}

TaskId parse_task(std::string_view name) {
  for (TaskId t : kAllTasks) {
    if (to_string(t) == name) return t;
  }
  fail(ErrorKind::validation, "unknown task '" + std::string(name) + "'");
}

std::string_view endpoint_slug(TaskId task) noexcept {
  switch (task) {
    case TaskId::breed: return "breed";
    case TaskId::disease_image: return "disease-image";
    case TaskId::behavior_video: return "disease-video";
    case TaskId::age_group: return "age";
    case TaskId::weight_group: return "weight";
  }
  return "breed";
}

std::optional<TaskId> task_from_slug(std::string_view slug) noexcept {
  for (TaskId t : kAllTasks) {
    if (endpoint_slug(t) == slug || to_string(t) == slug) return t;
  }
  return std::nullopt;
}

bool is_video_task(TaskId task) noexcept { return task == TaskId::behavior_video; }

LabelSpace::LabelSpace()
    : task_(TaskId::breed),
      labels_(std::make_shared<const std::vector<std::string>>(
          std::vector<std::string>{std::string(kUnknownLabel)})) {}

LabelSpace::LabelSpace(TaskId task, std::vector<std::string> labels)
    : task_(task),
      labels_(std::make_shared<const std::vector<std::string>>(std::move(labels))) {}

std::optional<std::size_t> LabelSpace::index_of(std::string_view label) const noexcept {
  const auto& l = *labels_;
  const auto it = std::lower_bound(l.begin(), l.end(), label,
                                   [](const std::string& a, std::string_view b) {
                                     return std::string_view(a) < b;
                                   });
  if (it == l.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - l.begin());
}

LabelSpace build_label_space(TaskId task, std::vector<std::string> raw_labels) {
  if (raw_labels.empty()) {
    fail(ErrorKind::validation, "label space for task '" + std::string(to_string(task)) +
                                    "' is empty");
  }
  std::set<std::string> seen;
  std::vector<std::string> labels;
  labels.reserve(raw_labels.size());
  for (const auto& raw : raw_labels) {
    std::string label = trim(raw);
    if (label.empty()) fail(ErrorKind::validation, "empty label");
    if (!seen.insert(label).second) {
      fail(ErrorKind::validation, "duplicate label '" + label + "'");
    }
    labels.push_back(std::move(label));
  }
  if (!seen.contains(std::string(kUnknownLabel))) {
    fail(ErrorKind::validation, "label space for task '" + std::string(to_string(task)) +
                                    "' has no \"Unknown\" label");
  }
  // std::string comparison is char_traits<char>::lt, which compares as
  // unsigned char: byte order.
  std::sort(labels.begin(), labels.end());
  return LabelSpace(task, std::move(labels));
}

const LabelSpace& canonical_label_space(TaskId task) {
  static const std::array<LabelSpace, 5> spaces = {
      build_label_space(TaskId::breed,
                        {"Ayrshire cattle", "Brown Swiss cattle", "Holstein Friesian cattle",
                         "Jersey cattle", "Unknown"}),
      build_label_space(TaskId::disease_image,
                        {"Bovine Johne_s Disease", "Foot _ Mouth Disease", "Healthy Cattle",
                         "Lumpy Skin Disease", "Mastitis Disease", "Milk Fever Disease",
                         "Unknown"}),
      build_label_space(TaskId::behavior_video,
                        {"Bovine Spongiform Encephalopathy", "Lameness", "Heat Stress",
                         "Healthy", "Unknown"}),
      build_label_space(TaskId::age_group, {"1 to 5 Years_Mouth", "11to 15 Years_Mouth",
                                            "5 to 10 Years_Mouth", "Unknown"}),
      build_label_space(TaskId::weight_group,
                        {"183lbs-278lbs_Body", "259lbs-548lbs_Body", "93lbs-177lbs_Body",
                         "Above 498lbs_Body", "Unknown"}),
  };
  return spaces[static_cast<std::size_t>(task)];
}

bool Distribution::is_normalized(double tolerance) const noexcept {
  if (probs.empty()) return false;
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

Prediction top1(const Distribution& distribution, const LabelSpace& space, double threshold) {
  if (distribution.probs.size() != space.size()) {
    fail(ErrorKind::validation, "distribution has " + std::to_string(distribution.probs.size()) +
                                    " entries but label space has " +
                                    std::to_string(space.size()));
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorKind::validation, "threshold must lie in [0, 1]");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < distribution.probs.size(); ++i) {
    if (distribution.probs[i] > distribution.probs[best]) best = i;
  }
  Prediction p;
  p.task = space.task();
  p.space = space;
  p.label = space[best];
  p.index = best;
  p.confidence = distribution.probs[best];
  p.distribution = distribution;
  p.threshold = threshold;
  p.inconclusive = p.confidence < threshold;
  return p;
}

int confidence_percent(double fraction) noexcept {
  // The epsilon absorbs representation error: 0.955 is stored as
  // 0.95499999999999996.
  return static_cast<int>(std::floor(fraction * 100.0 + 0.5 + 1e-9));
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

void to_json(nlohmann::json& j, TaskId task) { j = std::string(to_string(task)); }

void from_json(const nlohmann::json& j, TaskId& task) {
  task = parse_task(j.get<std::string>());
}

void to_json(nlohmann::json& j, const LabelSpace& space) {
  j = nlohmann::json{{"task", space.task()}, {"labels", space.labels()}};
}

LabelSpace label_space_from_json(const nlohmann::json& j) {
  try {
    return build_label_space(j.at("task").get<TaskId>(),
                             j.at("labels").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed label space: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const Prediction& p) {
  nlohmann::json dist = nlohmann::json::array();
  for (std::size_t i = 0; i < p.space.size(); ++i) {
    dist.push_back({{"label", p.space[i]}, {"probability", p.distribution.probs.at(i)}});
  }
  j = nlohmann::json{{"task", p.task},
                     {"label", p.label},
                     {"confidence", p.confidence},
                     {"confidence_percent", confidence_percent(p.confidence)},
                     {"distribution", std::move(dist)},
                     {"inconclusive", p.inconclusive},
                     {"threshold", p.threshold}};
}

Prediction prediction_from_json(const nlohmann::json& j) {
  try {
    const auto task = j.at("task").get<TaskId>();
    std::vector<std::string> labels;
    std::vector<std::pair<std::string, double>> pairs;
    for (const auto& item : j.at("distribution")) {
      pairs.emplace_back(item.at("label").get<std::string>(),
                         item.at("probability").get<double>());
      labels.push_back(pairs.back().first);
    }
    const LabelSpace space = build_label_space(task, labels);
    Distribution dist;
    dist.probs.resize(space.size());
    for (const auto& [label, prob] : pairs) dist.probs[*space.index_of(label)] = prob;
    return top1(dist, space, j.at("threshold").get<double>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed prediction: ") + e.what());
  }
}

}  // namespace taurus
