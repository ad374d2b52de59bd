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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taurus/taxonomy.hpp"

namespace taurus {

enum class MediaKind { image, video, frameset };

std::string_view to_string(MediaKind kind) noexcept;
MediaKind parse_media_kind(std::string_view name);

bool has_image_extension(const std::filesystem::path& p);
bool has_video_extension(const std::filesystem::path& p);

struct ManifestEntry {
  std::string path;  // relative to the manifest root, forward slashes
  TaskId task = TaskId::breed;
  std::string label;
  MediaKind kind = MediaKind::image;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::filesystem::path root;
  LabelSpace space;
  std::vector<ManifestEntry> entries;

  TaskId task() const noexcept { return space.task(); }
  std::filesystem::path resolve(const ManifestEntry& e) const { return root / e.path; }

  /// Throws a validation error if an entry's label is outside the space, its
  /// task differs, or a path repeats.
  void validate() const;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

/// Walks root/<label>/<media>. Only the immediate subdirectories of root are
/// labels; for framesets each subdirectory of a label directory holding at
/// least one image is one entry. Entries come back sorted by path.
Manifest scan_tree(const std::filesystem::path& root, TaskId task, MediaKind kind);

/// Counts per label in label-space order; labels without entries report 0.
std::map<std::string, std::size_t> class_counts(const Manifest& manifest);

/// Per-label stratified split. Each label's entries are shuffled by a
/// generator seeded from (seed, label) and the first ceil(fraction * n) go to
/// train. Both halves keep manifest order.
std::pair<Manifest, Manifest> split(const Manifest& manifest, const SplitSpec& spec);

/// CSV with header `path,task,label,kind`, LF line endings.
void write_manifest_csv(const Manifest& manifest, std::ostream& out);
std::vector<ManifestEntry> read_manifest_csv(std::istream& in);

/// Writes `<csv>` plus a `<csv>.json` sidecar holding the root and the full
/// label space (empty classes do not survive a CSV round trip).
void save_manifest(const Manifest& manifest, const std::filesystem::path& csv_path);

/// Reads a manifest written by save_manifest. Without a sidecar the root is
/// the CSV's directory and the label space is rebuilt from the rows.
Manifest load_manifest(const std::filesystem::path& csv_path,
                       const std::optional<std::filesystem::path>& root_override = {});

}  // namespace taurus
