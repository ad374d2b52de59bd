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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "taurus/media.hpp"

namespace taurus {

struct BackboneSpec {
  std::string id;
  int input_size = 224;
  int feature_dim = 1280;
  bool deterministic = true;

  friend bool operator==(const BackboneSpec&, const BackboneSpec&) = default;
};

/// Image-classifier backbone: 224 px in, 1280 features out.
BackboneSpec default_image_backbone();
/// Video frame backbone: 299 px in, 2048 features out.
BackboneSpec default_frame_backbone();

/// A frozen feature extractor.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual const BackboneSpec& spec() const noexcept = 0;
  /// Tensor size has already been checked against spec().input_size.
  virtual std::vector<float> extract(const ImageTensor& tensor) const = 0;
};

/// Checks the tensor shape, then delegates to the backbone.
std::vector<float> embed(const Backbone& backbone, const ImageTensor& tensor);

/// Linear stand-in for a pretrained network: averages 8x8 pixel blocks
/// (edge blocks average whatever pixels they hold) and multiplies by a fixed
/// random matrix derived from the BackboneSpec. Bit-reproducible and exactly linear.
class StubBackbone final : public Backbone {
 public:
  explicit StubBackbone(BackboneSpec spec);
  ~StubBackbone() override;

  const BackboneSpec& spec() const noexcept override { return spec_; }
  std::vector<float> extract(const ImageTensor& tensor) const override;

  static constexpr int kPoolCell = 8;

 private:
  struct Projection;
  BackboneSpec spec_;
  int cells_ = 0;
  std::unique_ptr<Projection> projection_;
};

using BackboneFactory = std::function<std::shared_ptr<const Backbone>(const BackboneSpec&)>;

/// Routes specs whose id starts with `prefix` to `factory`. This is the hook
/// for real pretrained backbones; ids starting with "stub" always resolve to
/// StubBackbone.
void register_backbone_factory(const std::string& prefix, BackboneFactory factory);

/// Instances are cached per spec and shared.
std::shared_ptr<const Backbone> make_backbone(const BackboneSpec& spec);

void to_json(nlohmann::json& j, const BackboneSpec& spec);
void from_json(const nlohmann::json& j, BackboneSpec& spec);

}  // namespace taurus
