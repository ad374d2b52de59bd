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
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "taurus/backbone.hpp"
#include "taurus/gru.hpp"
#include "taurus/media.hpp"

namespace taurus {

inline constexpr int kSequenceLength = 200;
inline constexpr int kFrameFeatureDim = 2048;

/// Frame indices kept from a clip of `frame_count` frames: all of them when
/// the clip fits, otherwise floor(i * frame_count / max_len) for i < max_len.
std::vector<std::size_t> sample_indices(std::size_t frame_count,
                                        std::size_t max_len = kSequenceLength);

struct FrameSequence {
  std::vector<ImageTensor> frames;
};

FrameSequence sample_frames(std::vector<ImageTensor> frames,
                            std::size_t max_len = kSequenceLength);

/// Fixed-length per-frame features with a prefix mask. featurize() leaves
/// padded rows at zero; consumers must not depend on that.
struct FeatureSequence {
  Eigen::MatrixXf features;  // steps x feature_dim
  StepMask mask;
  int valid_len = 0;

  int steps() const noexcept { return static_cast<int>(features.rows()); }
  int feature_dim() const noexcept { return static_cast<int>(features.cols()); }

  /// Mask length equals row count, mask is a prefix of valid_len true bits,
  /// and 1 <= valid_len <= steps.
  void validate() const;

  /// Places `prefix` in the first rows of a zeroed steps-row matrix.
  static FeatureSequence from_prefix(const Eigen::MatrixXf& prefix, int steps = kSequenceLength);
};

/// Embeds each frame with a 2048-feature backbone and pads to `steps` rows.
FeatureSequence featurize(const FrameSequence& sequence, const Backbone& backbone,
                          int steps = kSequenceLength);

/// Decodes a video container and returns uniformly sampled frames.
class FrameDecoder {
 public:
  virtual ~FrameDecoder() = default;
  virtual std::vector<RgbImage> decode(const std::filesystem::path& container,
                                       std::size_t max_frames) const = 0;
};

/// OpenCV/FFmpeg-backed decoder. Counts frames in a first pass and decodes
/// only the sampled ones in a second.
class OpenCvFrameDecoder final : public FrameDecoder {
 public:
  std::vector<RgbImage> decode(const std::filesystem::path& container,
                               std::size_t max_frames) const override;
};

/// A directory of frame images ordered by the number in each file name.
std::vector<RgbImage> load_frameset_dir(const std::filesystem::path& dir,
                                        std::size_t max_frames = kSequenceLength);

/// A ustar archive of frame images, ordered as for load_frameset_dir.
std::vector<RgbImage> load_frameset_archive(std::span<const std::uint8_t> tar_bytes,
                                            std::size_t max_frames = kSequenceLength);

/// Directory -> frameset, anything else -> `decoder`.
std::vector<RgbImage> load_video_frames(const std::filesystem::path& path,
                                        const FrameDecoder& decoder,
                                        std::size_t max_frames = kSequenceLength);

/// Tensorizes at the backbone's input size, samples, and featurizes.
FeatureSequence featurize_frames(const std::vector<RgbImage>& frames, const Backbone& backbone,
                                 int steps = kSequenceLength);

}  // namespace taurus
