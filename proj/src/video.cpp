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

#include "taurus/video.hpp"

#include <algorithm>
#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "taurus/error.hpp"
#include "taurus/ingest.hpp"

namespace fs = std::filesystem;

namespace taurus {

std::vector<std::size_t> sample_indices(std::size_t frame_count, std::size_t max_len) {
  if (frame_count == 0) fail(ErrorKind::validation, "video has no frames");
  if (max_len == 0) fail(ErrorKind::validation, "sequence budget must be positive");
  std::vector<std::size_t> idx;
  if (frame_count <= max_len) {
    idx.resize(frame_count);
    for (std::size_t i = 0; i < frame_count; ++i) idx[i] = i;
    return idx;
  }
  idx.reserve(max_len);
  for (std::size_t i = 0; i < max_len; ++i) idx.push_back(i * frame_count / max_len);
  return idx;
}

FrameSequence sample_frames(std::vector<ImageTensor> frames, std::size_t max_len) {
  const auto idx = sample_indices(frames.size(), max_len);
  FrameSequence seq;
  seq.frames.reserve(idx.size());
  for (auto i : idx) seq.frames.push_back(std::move(frames[i]));
  return seq;
}

void FeatureSequence::validate() const {
  const auto rows = static_cast<std::size_t>(features.rows());
  if (mask.size() != rows) {
    fail(ErrorKind::validation, "mask has " + std::to_string(mask.size()) + " entries for " +
                                    std::to_string(rows) + " feature rows");
  }
  if (valid_len < 1 || static_cast<std::size_t>(valid_len) > rows) {
    fail(ErrorKind::validation, "valid_len " + std::to_string(valid_len) + " is out of range");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (mask[i] != (i < static_cast<std::size_t>(valid_len))) {
      fail(ErrorKind::validation, "mask is not a prefix of valid_len true steps");
    }
  }
}

FeatureSequence FeatureSequence::from_prefix(const Eigen::MatrixXf& prefix, int steps) {
  if (prefix.rows() < 1 || prefix.rows() > steps) {
    fail(ErrorKind::validation, "sequence of " + std::to_string(prefix.rows()) +
                                    " rows does not fit " + std::to_string(steps) + " steps");
  }
  FeatureSequence fs;
  fs.features = Eigen::MatrixXf::Zero(steps, prefix.cols());
  fs.features.topRows(prefix.rows()) = prefix;
  fs.valid_len = static_cast<int>(prefix.rows());
  fs.mask.assign(static_cast<std::size_t>(steps), false);
  std::fill_n(fs.mask.begin(), fs.valid_len, true);
  return fs;
}

FeatureSequence featurize(const FrameSequence& sequence, const Backbone& backbone, int steps) {
  if (backbone.spec().feature_dim != kFrameFeatureDim) {
    fail(ErrorKind::configuration, "frame backbone '" + backbone.spec().id + "' produces " +
                                       std::to_string(backbone.spec().feature_dim) +
                                       " features; the sequence head needs " +
                                       std::to_string(kFrameFeatureDim));
  }
  const auto t = static_cast<int>(sequence.frames.size());
  if (t < 1 || t > steps) {
    fail(ErrorKind::validation, "frame sequence length " + std::to_string(t) +
                                    " is outside [1, " + std::to_string(steps) + "]");
  }
  Eigen::MatrixXf prefix(t, kFrameFeatureDim);
  for (int i = 0; i < t; ++i) {
    const auto f = embed(backbone, sequence.frames[static_cast<std::size_t>(i)]);
    prefix.row(i) = Eigen::Map<const Eigen::RowVectorXf>(f.data(), kFrameFeatureDim);
  }
  return FeatureSequence::from_prefix(prefix, steps);
}

std::vector<RgbImage> OpenCvFrameDecoder::decode(const fs::path& container,
                                                 std::size_t max_frames) const {
  std::size_t count = 0;
  {
    cv::VideoCapture cap(container.string());
    if (!cap.isOpened()) fail(ErrorKind::media, "cannot open video '" + container.string() + "'");
    while (cap.grab()) ++count;
  }
  if (count == 0) fail(ErrorKind::media, "video '" + container.string() + "' has no frames");
  const auto idx = sample_indices(count, max_frames);

  cv::VideoCapture cap(container.string());
  std::vector<RgbImage> frames;
  frames.reserve(idx.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < count && next < idx.size(); ++i) {
    if (!cap.grab()) break;
    // idx is strictly increasing.
    if (i != idx[next]) continue;
    cv::Mat bgr;
    if (!cap.retrieve(bgr) || bgr.empty()) {
      fail(ErrorKind::media, "cannot decode frame " + std::to_string(i) + " of '" +
                                 container.string() + "'");
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    RgbImage img;
    img.width = rgb.cols;
    img.height = rgb.rows;
    if (!rgb.isContinuous()) rgb = rgb.clone();
    img.pixels.assign(rgb.data, rgb.data + rgb.total() * 3);
    frames.push_back(std::move(img));
    ++next;
  }
  if (frames.size() != idx.size()) {
    fail(ErrorKind::media, "video '" + container.string() + "' ended early");
  }
  return frames;
}

std::vector<RgbImage> load_frameset_dir(const fs::path& dir, std::size_t max_frames) {
  std::vector<std::string> names;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::io, "frameset '" + dir.string() + "' is missing");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && has_image_extension(e.path())) {
      names.push_back(e.path().filename().string());
    }
  }
  if (names.empty()) fail(ErrorKind::media, "frameset '" + dir.string() + "' holds no images");
  std::sort(names.begin(), names.end(), frame_name_less);
  std::vector<RgbImage> frames;
  for (auto i : sample_indices(names.size(), max_frames)) {
    frames.push_back(load_image(dir / names[i]));
  }
  return frames;
}

std::vector<RgbImage> load_frameset_archive(std::span<const std::uint8_t> tar_bytes,
                                            std::size_t max_frames) {
  auto members = read_tar(tar_bytes);
  std::erase_if(members, [](const ArchiveMember& m) {
    const auto name = fs::path(m.name).filename().string();
    return name.empty() || name.front() == '.' || !has_image_extension(m.name);
  });
  if (members.empty()) fail(ErrorKind::media, "frameset archive holds no images");
  std::sort(members.begin(), members.end(), [](const ArchiveMember& a, const ArchiveMember& b) {
    return frame_name_less(fs::path(a.name).filename().string(),
                           fs::path(b.name).filename().string());
  });
  std::vector<RgbImage> frames;
  for (auto i : sample_indices(members.size(), max_frames)) {
    frames.push_back(decode_image(members[i].data));
  }
  return frames;
}

std::vector<RgbImage> load_video_frames(const fs::path& path, const FrameDecoder& decoder,
                                        std::size_t max_frames) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) return load_frameset_dir(path, max_frames);
  if (!fs::exists(path, ec)) fail(ErrorKind::io, "video '" + path.string() + "' does not exist");
  return decoder.decode(path, max_frames);
}

FeatureSequence featurize_frames(const std::vector<RgbImage>& frames, const Backbone& backbone,
                                 int steps) {
  std::vector<ImageTensor> tensors;
  tensors.reserve(frames.size());
  for (const auto& f : frames) tensors.push_back(to_tensor(f, backbone.spec().input_size));
  return featurize(sample_frames(std::move(tensors), static_cast<std::size_t>(steps)), backbone,
                   steps);
}

}  // namespace taurus
