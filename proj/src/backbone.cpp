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

#include "taurus/backbone.hpp"

#include <Eigen/Core>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "taurus/error.hpp"
#include "taurus/rng.hpp"

namespace taurus {

struct StubBackbone::Projection {
  Eigen::MatrixXf weights;  // feature_dim x pooled_dim
};

BackboneSpec default_image_backbone() { return {"stub-mobilenet-v2", 224, 1280, true}; }
BackboneSpec default_frame_backbone() { return {"stub-inception-v3", 299, 2048, true}; }

std::vector<float> embed(const Backbone& backbone, const ImageTensor& tensor) {
  const int n = backbone.spec().input_size;
  if (tensor.height != n || tensor.width != n ||
      tensor.values.size() != static_cast<std::size_t>(n) * n * ImageTensor::channels) {
    fail(ErrorKind::validation, "tensor is " + std::to_string(tensor.height) + "x" +
                                    std::to_string(tensor.width) + " but backbone '" +
                                    backbone.spec().id + "' expects " + std::to_string(n) +
                                    "x" + std::to_string(n));
  }
  return backbone.extract(tensor);
}

StubBackbone::StubBackbone(BackboneSpec spec)
    : spec_(std::move(spec)), projection_(std::make_unique<Projection>()) {
  if (spec_.input_size <= 0 || spec_.feature_dim <= 0) {
    fail(ErrorKind::configuration, "backbone '" + spec_.id + "' has a non-positive size");
  }
  cells_ = (spec_.input_size + kPoolCell - 1) / kPoolCell;
  const int pooled = cells_ * cells_ * ImageTensor::channels;
  Rng rng(mix_seed(fnv1a64(spec_.id),
                   static_cast<std::uint64_t>(spec_.input_size) << 32 |
                       static_cast<std::uint64_t>(spec_.feature_dim)));
  const double scale = std::sqrt(3.0 / pooled);
  auto& w = projection_->weights;
  w.resize(spec_.feature_dim, pooled);
  for (int c = 0; c < pooled; ++c) {
    for (int r = 0; r < spec_.feature_dim; ++r) {
      w(r, c) = static_cast<float>(rng.uniform(-scale, scale));
    }
  }
  spec_.deterministic = true;
}

StubBackbone::~StubBackbone() = default;

std::vector<float> StubBackbone::extract(const ImageTensor& tensor) const {
  const int n = spec_.input_size;
  constexpr int ch = ImageTensor::channels;
  Eigen::VectorXf pooled = Eigen::VectorXf::Zero(cells_ * cells_ * ch);
  for (int cy = 0; cy < cells_; ++cy) {
    const int y1 = std::min(n, (cy + 1) * kPoolCell);
    for (int cx = 0; cx < cells_; ++cx) {
      const int x1 = std::min(n, (cx + 1) * kPoolCell);
      float sum[ch] = {0.f, 0.f, 0.f};
      for (int y = cy * kPoolCell; y < y1; ++y) {
        for (int x = cx * kPoolCell; x < x1; ++x) {
          const float* px = &tensor.values[(static_cast<std::size_t>(y) * n + x) * ch];
          for (int c = 0; c < ch; ++c) sum[c] += px[c];
        }
      }
      const float count = static_cast<float>((y1 - cy * kPoolCell) * (x1 - cx * kPoolCell));
      for (int c = 0; c < ch; ++c) pooled((cy * cells_ + cx) * ch + c) = sum[c] / count;
    }
  }
  const Eigen::VectorXf features = projection_->weights * pooled;
  return {features.data(), features.data() + features.size()};
}

namespace {

struct BackboneRegistry {
  std::mutex mu;
  std::vector<std::pair<std::string, BackboneFactory>> factories;
  std::map<std::tuple<std::string, int, int>, std::shared_ptr<const Backbone>> cache;
};

BackboneRegistry& registry() {
  static BackboneRegistry r;
  return r;
}

}  // namespace

void register_backbone_factory(const std::string& prefix, BackboneFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.factories.emplace_back(prefix, std::move(factory));
}

std::shared_ptr<const Backbone> make_backbone(const BackboneSpec& spec) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  const auto key = std::make_tuple(spec.id, spec.input_size, spec.feature_dim);
  if (auto it = r.cache.find(key); it != r.cache.end()) return it->second;

  std::shared_ptr<const Backbone> made;
  if (spec.id.starts_with("stub")) {
    made = std::make_shared<StubBackbone>(spec);
  } else {
    for (const auto& [prefix, factory] : r.factories) {
      if (spec.id.starts_with(prefix)) {
        made = factory(spec);
        break;
      }
    }
  }
  if (!made) fail(ErrorKind::configuration, "no backbone available for id '" + spec.id + "'");
  if (made->spec().feature_dim != spec.feature_dim ||
      made->spec().input_size != spec.input_size) {
    fail(ErrorKind::configuration, "backbone '" + spec.id + "' does not match its spec");
  }
  r.cache.emplace(key, made);
  return made;
}

void to_json(nlohmann::json& j, const BackboneSpec& spec) {
  j = nlohmann::json{{"id", spec.id},
                     {"input_size", spec.input_size},
                     {"feature_dim", spec.feature_dim},
                     {"deterministic", spec.deterministic}};
}

void from_json(const nlohmann::json& j, BackboneSpec& spec) {
  spec.id = j.at("id").get<std::string>();
  spec.input_size = j.at("input_size").get<int>();
  spec.feature_dim = j.at("feature_dim").get<int>();
  spec.deterministic = j.value("deterministic", true);
}

}  // namespace taurus
