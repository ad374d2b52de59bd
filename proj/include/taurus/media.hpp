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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace taurus {

/// 8-bit interleaved RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(int y, int x, int c) { return pixels[(y * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const { return pixels[(y * width + x) * 3 + c]; }
};

/// Backbone input: HWC float32 with values in [-1, 1].
struct ImageTensor {
  int height = 0;
  int width = 0;
  static constexpr int channels = 3;
  std::vector<float> values;

  ImageTensor scaled(float k) const {
    ImageTensor t = *this;
    for (float& v : t.values) v *= k;
    return t;
  }
};

RgbImage decode_image(std::span<const std::uint8_t> bytes);
RgbImage load_image(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const RgbImage& image);

/// Bilinear resize to target x target, then v / 127.5 - 1 per channel.
ImageTensor to_tensor(const RgbImage& image, int target);
ImageTensor preprocess(std::span<const std::uint8_t> image_bytes, int target);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

struct ArchiveMember {
  std::string name;
  std::vector<std::uint8_t> data;
};

bool looks_like_tar(std::span<const std::uint8_t> bytes) noexcept;

/// Regular-file members of a POSIX ustar archive, in archive order.
std::vector<ArchiveMember> read_tar(std::span<const std::uint8_t> bytes);

/// Sort key for frame files: the numeric value of the last run of digits in
/// the file stem ("frame_12.png" -> 12), then the name itself.
bool frame_name_less(const std::string& a, const std::string& b);

}  // namespace taurus
