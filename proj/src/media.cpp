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

#include "taurus/media.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "taurus/error.hpp"

namespace fs = std::filesystem;

namespace taurus {

namespace {

RgbImage from_bgr(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  RgbImage img;
  img.width = rgb.cols;
  img.height = rgb.rows;
  img.pixels.resize(static_cast<std::size_t>(rgb.total()) * 3);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<std::uint8_t>(y);
    std::copy(row, row + rgb.cols * 3, img.pixels.begin() + std::ptrdiff_t{y} * rgb.cols * 3);
  }
  return img;
}

cv::Mat as_mat(const RgbImage& image) {
  // Wraps without copying; callers must not outlive `image`.
  return cv::Mat(image.height, image.width, CV_8UC3,
                 const_cast<std::uint8_t*>(image.pixels.data()));
}

std::uint64_t parse_octal(std::span<const std::uint8_t> field) {
  std::uint64_t v = 0;
  for (auto c : field) {
    if (c == 0 || c == ' ') {
      if (v != 0) break;
      continue;
    }
    if (c < '0' || c > '7') fail(ErrorKind::media, "corrupt tar header");
    v = v * 8 + (c - '0');
  }
  return v;
}

std::string c_string(std::span<const std::uint8_t> field) {
  std::string s;
  for (auto c : field) {
    if (c == 0) break;
    s += static_cast<char>(c);
  }
  return s;
}

}  // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) fail(ErrorKind::media, "image is empty");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat decoded;
  try {
    decoded = cv::imdecode(buf, cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    decoded.release();
  }
  if (decoded.empty()) fail(ErrorKind::media, "image bytes could not be decoded");
  return from_bgr(decoded);
}

RgbImage load_image(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    fail(ErrorKind::media, path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  cv::Mat bgr;
  cv::cvtColor(as_mat(image), bgr, cv::COLOR_RGB2BGR);
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", bgr, out)) fail(ErrorKind::media, "png encoding failed");
  return out;
}

ImageTensor to_tensor(const RgbImage& image, int target) {
  if (target <= 0) fail(ErrorKind::validation, "target size must be positive");
  if (image.width <= 0 || image.height <= 0) fail(ErrorKind::media, "image has no pixels");
  cv::Mat src = as_mat(image);
  cv::Mat resized;
  if (image.width == target && image.height == target) {
    resized = src;
  } else {
    cv::resize(src, resized, cv::Size(target, target), 0, 0, cv::INTER_LINEAR);
  }
  ImageTensor t;
  t.height = target;
  t.width = target;
  t.values.resize(static_cast<std::size_t>(target) * target * 3);
  std::size_t k = 0;
  for (int y = 0; y < target; ++y) {
    const auto* row = resized.ptr<std::uint8_t>(y);
    for (int x = 0; x < target * 3; ++x) {
      t.values[k++] = static_cast<float>(row[x] / 127.5 - 1.0);
    }
  }
  return t;
}

ImageTensor preprocess(std::span<const std::uint8_t> image_bytes, int target) {
  if (target <= 0) fail(ErrorKind::validation, "target size must be positive");
  return to_tensor(decode_image(image_bytes), target);
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool looks_like_tar(std::span<const std::uint8_t> bytes) noexcept {
  return bytes.size() >= 512 && std::equal(bytes.begin() + 257, bytes.begin() + 262,
                                           reinterpret_cast<const std::uint8_t*>("ustar"));
}

std::vector<ArchiveMember> read_tar(std::span<const std::uint8_t> bytes) {
  std::vector<ArchiveMember> members;
  std::size_t pos = 0;
  while (pos + 512 <= bytes.size()) {
    const auto header = bytes.subspan(pos, 512);
    if (std::all_of(header.begin(), header.end(), [](auto c) { return c == 0; })) break;
    const std::string name = c_string(header.subspan(0, 100));
    const std::string prefix = c_string(header.subspan(345, 155));
    const std::uint64_t size = parse_octal(header.subspan(124, 12));
    const char type = static_cast<char>(header[156]);
    pos += 512;
    if (pos + size > bytes.size()) fail(ErrorKind::media, "tar member '" + name + "' is truncated");
    if (type == '0' || type == '\0') {
      ArchiveMember m;
      m.name = prefix.empty() ? name : prefix + "/" + name;
      m.data.assign(bytes.begin() + pos, bytes.begin() + pos + size);
      members.push_back(std::move(m));
    }
    pos += (size + 511) / 512 * 512;
  }
  return members;
}

bool frame_name_less(const std::string& a, const std::string& b) {
  auto key = [](const std::string& name) -> std::uint64_t {
    const std::string stem = fs::path(name).stem().string();
    auto end = stem.find_last_of("0123456789");
    if (end == std::string::npos) return 0;
    auto begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
    const auto digits = stem.substr(begin, std::min<std::size_t>(end - begin + 1, 18));
    return std::stoull(digits);
  };
  const auto ka = key(a);
  const auto kb = key(b);
  if (ka != kb) return ka < kb;
  return a < b;
}

}  // namespace taurus
