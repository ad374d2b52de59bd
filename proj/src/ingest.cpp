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

#include "taurus/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "taurus/error.hpp"
#include "taurus/rng.hpp"

namespace fs = std::filesystem;

namespace taurus {

namespace {

std::string lower_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

bool is_hidden(const fs::path& p) {
  const auto name = p.filename().string();
  return !name.empty() && name.front() == '.';
}

bool holds_image(const fs::path& dir) {
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && has_image_extension(e.path())) return true;
  }
  return false;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Splits one CSV record. Quoted fields may contain commas and doubled quotes;
// embedded newlines are not supported.
std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) fail(ErrorKind::data, "unterminated quote in manifest row: " + line);
  return fields;
}

fs::path sidecar_path(const fs::path& csv_path) {
  return fs::path(csv_path.string() + ".json");
}

}  // namespace

std::string_view to_string(MediaKind kind) noexcept {
  switch (kind) {
    case MediaKind::image: return "image";
    case MediaKind::video: return "video";
    case MediaKind::frameset: return "frameset";
  }
  return "image";
}

MediaKind parse_media_kind(std::string_view name) {
  if (name == "image") return MediaKind::image;
  if (name == "video") return MediaKind::video;
  if (name == "frameset") return MediaKind::frameset;
  fail(ErrorKind::validation, "unknown media kind '" + std::string(name) + "'");
}

bool has_image_extension(const fs::path& p) {
  static const std::set<std::string> exts = {".jpg", ".jpeg", ".png", ".bmp"};
  return exts.contains(lower_extension(p));
}

bool has_video_extension(const fs::path& p) {
  static const std::set<std::string> exts = {".mp4", ".avi", ".mov"};
  return exts.contains(lower_extension(p));
}

void Manifest::validate() const {
  std::set<std::string_view> paths;
  for (const auto& e : entries) {
    if (e.task != space.task()) {
      fail(ErrorKind::validation, "entry '" + e.path + "' has task " +
                                      std::string(to_string(e.task)) + ", manifest has " +
                                      std::string(to_string(space.task())));
    }
    if (!space.contains(e.label)) {
      fail(ErrorKind::validation,
           "entry '" + e.path + "' has label '" + e.label + "' outside the label space");
    }
    if (!paths.insert(e.path).second) {
      fail(ErrorKind::validation, "duplicate manifest path '" + e.path + "'");
    }
  }
}

Manifest scan_tree(const fs::path& root, TaskId task, MediaKind kind) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    fail(ErrorKind::io, "dataset root '" + root.string() + "' does not exist");
  }
  std::vector<fs::path> label_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && !is_hidden(e.path())) label_dirs.push_back(e.path());
  }
  if (label_dirs.empty()) {
    fail(ErrorKind::validation, "dataset root '" + root.string() + "' has no label directories");
  }
  std::vector<std::string> names;
  for (const auto& d : label_dirs) names.push_back(d.filename().string());

  Manifest m;
  m.root = root;
  m.space = build_label_space(task, names);

  for (const auto& dir : label_dirs) {
    const std::string label = dir.filename().string();
    for (const auto& e : fs::directory_iterator(dir)) {
      const fs::path& p = e.path();
      if (is_hidden(p)) continue;
      bool take = false;
      switch (kind) {
        case MediaKind::image: take = e.is_regular_file() && has_image_extension(p); break;
        case MediaKind::video: take = e.is_regular_file() && has_video_extension(p); break;
        case MediaKind::frameset: take = e.is_directory() && holds_image(p); break;
      }
      if (!take) continue;
      m.entries.push_back({fs::relative(p, root).generic_string(), task, label, kind});
    }
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  return m;
}

std::map<std::string, std::size_t> class_counts(const Manifest& manifest) {
  std::map<std::string, std::size_t> counts;
  for (const auto& label : manifest.space.labels()) counts[label] = 0;
  for (const auto& e : manifest.entries) ++counts[e.label];
  return counts;
}

std::pair<Manifest, Manifest> split(const Manifest& manifest, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
    fail(ErrorKind::validation, "train fraction must lie in (0, 1]");
  }
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    by_label[manifest.entries[i].label].push_back(i);
  }
  std::vector<bool> to_train(manifest.entries.size(), false);
  for (auto& [label, idx] : by_label) {
    Rng rng(mix_seed(spec.seed, fnv1a64(label)));
    shuffle(idx, rng);
    // 0.7 * 10 evaluates to 7.000000000000001; the slack keeps ceil honest.
    const auto n_train = static_cast<std::size_t>(
        std::ceil(spec.train_fraction * static_cast<double>(idx.size()) - 1e-9));
    for (std::size_t k = 0; k < n_train && k < idx.size(); ++k) to_train[idx[k]] = true;
  }
  Manifest train{manifest.root, manifest.space, {}};
  Manifest val{manifest.root, manifest.space, {}};
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    (to_train[i] ? train : val).entries.push_back(manifest.entries[i]);
  }
  return {std::move(train), std::move(val)};
}

void write_manifest_csv(const Manifest& manifest, std::ostream& out) {
  out << "path,task,label,kind\n";
  for (const auto& e : manifest.entries) {
    out << csv_field(e.path) << ',' << to_string(e.task) << ',' << csv_field(e.label) << ','
        << to_string(e.kind) << '\n';
  }
}

std::vector<ManifestEntry> read_manifest_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::data, "manifest is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,task,label,kind") {
    fail(ErrorKind::data, "manifest header must be 'path,task,label,kind'");
  }
  std::vector<ManifestEntry> entries;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = parse_csv_line(line);
    if (f.size() != 4) {
      fail(ErrorKind::data, "manifest row " + std::to_string(row) + " has " +
                                std::to_string(f.size()) + " fields, expected 4");
    }
    entries.push_back({f[0], parse_task(f[1]), f[2], parse_media_kind(f[3])});
  }
  return entries;
}

void save_manifest(const Manifest& manifest, const fs::path& csv_path) {
  if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write '" + csv_path.string() + "'");
    write_manifest_csv(manifest, out);
  }
  nlohmann::json side = {{"root", fs::absolute(manifest.root).lexically_normal().string()},
                         {"space", manifest.space}};
  std::ofstream out(sidecar_path(csv_path), std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write manifest sidecar for '" + csv_path.string() + "'");
  out << side.dump(2) << '\n';
}

Manifest load_manifest(const fs::path& csv_path, const std::optional<fs::path>& root_override) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read manifest '" + csv_path.string() + "'");
  Manifest m;
  m.entries = read_manifest_csv(in);

  std::optional<LabelSpace> space;
  fs::path root = csv_path.has_parent_path() ? csv_path.parent_path() : fs::path(".");
  if (std::ifstream side(sidecar_path(csv_path)); side) {
    try {
      const auto j = nlohmann::json::parse(side);
      root = j.at("root").get<std::string>();
      space = label_space_from_json(j.at("space"));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::data, std::string("malformed manifest sidecar: ") + e.what());
    }
  }
  if (!space) {
    if (m.entries.empty()) {
      fail(ErrorKind::data, "manifest '" + csv_path.string() +
                                "' has no rows and no sidecar; its task is unknown");
    }
    std::set<std::string> labels;
    for (const auto& e : m.entries) labels.insert(e.label);
    space = build_label_space(m.entries.front().task, {labels.begin(), labels.end()});
  }
  m.space = *space;
  m.root = root_override.value_or(root);
  m.validate();
  return m;
}

}  // namespace taurus
