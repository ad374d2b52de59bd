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

#include "fixtures.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "taurus/error.hpp"
#include "taurus/rng.hpp"

namespace taurus::fixtures {

namespace fs = std::filesystem;

const std::vector<ClassCount>& reference_counts(TaskId task) {
  static const std::vector<ClassCount> breed = {{"Ayrshire cattle", 260},
                                                {"Brown Swiss cattle", 238},
                                                {"Holstein Friesian cattle", 254},
                                                {"Jersey cattle", 252},
                                                {"Unknown", 119}};
  static const std::vector<ClassCount> disease = {{"Bovine Johne_s Disease", 32},
                                                  {"Foot _ Mouth Disease", 75},
                                                  {"Lumpy Skin Disease", 92},
                                                  {"Mastitis Disease", 74},
                                                  {"Milk Fever Disease", 28},
                                                  {"Healthy Cattle", 61},
                                                  {"Unknown", 92}};
  static const std::vector<ClassCount> video = {{"Bovine Spongiform Encephalopathy", 90},
                                                {"Lameness", 37},
                                                {"Heat Stress", 21},
                                                {"Healthy", 19},
                                                {"Unknown", 81}};
  static const std::vector<ClassCount> age = {{"1 to 5 Years_Mouth", 12},
                                              {"5 to 10 Years_Mouth", 47},
                                              {"11to 15 Years_Mouth", 22},
                                              {"Unknown", 99}};
  static const std::vector<ClassCount> weight = {{"93lbs-177lbs_Body", 144},
                                                 {"183lbs-278lbs_Body", 80},
                                                 {"259lbs-548lbs_Body", 595},
                                                 {"Above 498lbs_Body", 238},
                                                 {"Unknown", 119}};
  switch (task) {
    case TaskId::breed: return breed;
    case TaskId::disease_image: return disease;
    case TaskId::behavior_video: return video;
    case TaskId::age_group: return age;
    case TaskId::weight_group: return weight;
  }
  return breed;
}

std::size_t reference_total(TaskId task) {
  std::size_t n = 0;
  for (const auto& c : reference_counts(task)) n += c.count;
  return n;
}

TempDir::TempDir(const std::string& tag) {
  std::string pattern = (fs::temp_directory_path() / (tag + "-XXXXXX")).string();
  std::vector<char> buf(pattern.begin(), pattern.end());
  buf.push_back('\0');
  if (!mkdtemp(buf.data())) fail(ErrorKind::io, "mkdtemp failed");
  path_ = buf.data();
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
}

void write_count_tree(const fs::path& root, const std::vector<ClassCount>& counts, MediaKind kind) {
  const auto png = encode_png(noise_image(1, 4, 4));
  for (const auto& c : counts) {
    const fs::path dir = root / c.label;
    fs::create_directories(dir);
    for (std::size_t i = 0; i < c.count; ++i) {
      const std::string n = std::to_string(i);
      switch (kind) {
        case MediaKind::image: write_bytes(dir / ("item_" + n + ".png"), png); break;
        case MediaKind::video: write_bytes(dir / ("item_" + n + ".mp4"), {}); break;
        case MediaKind::frameset: write_bytes(dir / ("clip_" + n) / "frame_0.png", png); break;
      }
    }
  }
}

RgbImage noise_image(std::uint64_t seed, int width, int height) {
  Rng rng(seed);
  RgbImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<std::size_t>(width * height * 3));
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

RgbImage class_image(std::size_t cls, std::size_t n_classes, std::uint64_t seed, int size) {
  Rng rng(mix_seed(seed, cls));
  RgbImage img;
  img.width = size;
  img.height = size;
  img.pixels.resize(static_cast<std::size_t>(size * size * 3));
  const double hue = static_cast<double>(cls) / static_cast<double>(n_classes);
  const int base[3] = {static_cast<int>(40 + 160 * hue), static_cast<int>(200 - 160 * hue),
                       static_cast<int>(cls % 2 ? 180 : 60)};
  const int cells = 4;
  const int patch = size / cells;
  const int px = static_cast<int>(cls % cells) * patch;
  const int py = static_cast<int>((cls / cells) % cells) * patch;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool in_patch = x >= px && x < px + patch && y >= py && y < py + patch;
      for (int c = 0; c < 3; ++c) {
        int v = (in_patch ? 250 : base[c]) + static_cast<int>(rng.below(31)) - 15;
        img.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> class_png(std::size_t cls, std::size_t n_classes, std::uint64_t seed,
                                    int size) {
  return encode_png(class_image(cls, n_classes, seed, size));
}

std::vector<LabeledSequence> separable_sequences(std::size_t n, std::size_t n_classes, int dim,
                                                 int min_len, int max_len, int steps,
                                                 double noise, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::RowVectorXf> means;
  for (std::size_t k = 0; k < n_classes; ++k) {
    Eigen::RowVectorXf m(dim);
    for (int j = 0; j < dim; ++j) m(j) = static_cast<float>(rng.normal());
    means.push_back(m);
  }
  std::vector<LabeledSequence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % n_classes;
    const int len = min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
    Eigen::MatrixXf prefix(len, dim);
    for (int t = 0; t < len; ++t) {
      for (int j = 0; j < dim; ++j) {
        prefix(t, j) = means[label](j) + static_cast<float>(noise * rng.normal());
      }
    }
    out.push_back({FeatureSequence::from_prefix(prefix, steps), label});
  }
  return out;
}

std::vector<std::uint8_t> make_tar(const std::vector<ArchiveMember>& members) {
  std::vector<std::uint8_t> out;
  for (const auto& m : members) {
    std::array<char, 512> h{};
    std::snprintf(h.data(), 100, "%s", m.name.c_str());
    std::snprintf(h.data() + 100, 8, "%07o", 0644);
    std::snprintf(h.data() + 108, 8, "%07o", 0);
    std::snprintf(h.data() + 116, 8, "%07o", 0);
    std::snprintf(h.data() + 124, 12, "%011llo", static_cast<unsigned long long>(m.data.size()));
    std::snprintf(h.data() + 136, 12, "%011o", 0);
    h[156] = '0';
    std::memcpy(h.data() + 257, "ustar", 6);
    std::memcpy(h.data() + 263, "00", 2);
    std::memset(h.data() + 148, ' ', 8);
    unsigned sum = 0;
    for (char c : h) sum += static_cast<unsigned char>(c);
    std::snprintf(h.data() + 148, 8, "%06o", sum);
    h[155] = ' ';
    out.insert(out.end(), h.begin(), h.end());
    out.insert(out.end(), m.data.begin(), m.data.end());
    out.resize((out.size() + 511) / 512 * 512, 0);
  }
  out.resize(out.size() + 1024, 0);
  return out;
}

std::vector<std::uint8_t> frameset_tar(const std::vector<RgbImage>& frames) {
  std::vector<ArchiveMember> members;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    members.push_back({"frame_" + std::to_string(i) + ".png", encode_png(frames[i])});
  }
  return make_tar(members);
}

}  // namespace taurus::fixtures
