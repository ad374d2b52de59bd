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
#include <string>
#include <vector>

#include "taurus/ingest.hpp"
#include "taurus/media.hpp"
#include "taurus/sequence_head.hpp"
#include "taurus/taxonomy.hpp"
#include "taurus/video.hpp"

namespace taurus::fixtures {

struct ClassCount {
  std::string label;
  std::size_t count = 0;
};

/// Per-class sizes of the reference collections: breed, disease and video, and
/// the age and weight class maps (with the Unknown class sized so the totals
/// match the reported image counts).
const std::vector<ClassCount>& reference_counts(TaskId task);
std::size_t reference_total(TaskId task);

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "taurus-test");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// root/<label>/item_<i>.png for images, item_<i>.mp4 placeholders for video,
/// root/<label>/clip_<i>/frame_0.png for framesets.
void write_count_tree(const std::filesystem::path& root, const std::vector<ClassCount>& counts,
                      MediaKind kind);

/// Separable synthetic image for class `cls`: a class colour, a bright patch at
/// a class position, and seeded noise.
RgbImage class_image(std::size_t cls, std::size_t n_classes, std::uint64_t seed, int size = 32);
std::vector<std::uint8_t> class_png(std::size_t cls, std::size_t n_classes, std::uint64_t seed,
                                    int size = 32);

/// Uniform-noise image.
RgbImage noise_image(std::uint64_t seed, int width, int height);

/// Class-mean feature vectors plus Gaussian noise, valid length in
/// [min_len, max_len], padded to `steps` rows.
std::vector<LabeledSequence> separable_sequences(std::size_t n, std::size_t n_classes, int dim,
                                                 int min_len, int max_len, int steps,
                                                 double noise, std::uint64_t seed);

/// POSIX ustar archive of regular files.
std::vector<std::uint8_t> make_tar(const std::vector<ArchiveMember>& members);

/// frames as frame_<i>.png members of a tar archive.
std::vector<std::uint8_t> frameset_tar(const std::vector<RgbImage>& frames);

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace taurus::fixtures
