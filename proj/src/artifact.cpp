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

#include "taurus/artifact.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "taurus/error.hpp"
#include "taurus/media.hpp"

namespace fs = std::filesystem;

namespace taurus {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void append_le(std::vector<char>& out, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float read_le(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

void write_whole(const fs::path& path, const char* data, std::size_t size) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write '" + tmp.string() + "'");
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) fail(ErrorKind::io, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

[[noreturn]] void load_error(const fs::path& dir, const std::string& what) {
  fail(ErrorKind::model_load, "artifact '" + dir.string() + "': " + what);
}

}  // namespace

const TensorData& Artifact::tensor(const std::string& name,
                                   const std::vector<std::size_t>& expected_shape) const {
  for (const auto& t : tensors) {
    if (t.name != name) continue;
    if (t.shape != expected_shape) {
      load_error(dir, "tensor '" + name + "' has shape " + nlohmann::json(t.shape).dump() +
                          ", expected " + nlohmann::json(expected_shape).dump());
    }
    return t;
  }
  load_error(dir, "tensor '" + name + "' is missing");
}

void write_artifact(const fs::path& dir, nlohmann::json meta,
                    const std::vector<TensorData>& tensors) {
  fs::create_directories(dir);
  std::vector<char> blob;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& t : tensors) {
    if (element_count(t.shape) != t.values.size()) {
      fail(ErrorKind::validation, "tensor '" + t.name + "' values do not match its shape");
    }
    index.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", blob.size()}});
    for (float v : t.values) append_le(blob, v);
  }
  meta["schema_version"] = kArtifactSchemaVersion;
  meta["tensors"] = std::move(index);
  write_whole(dir / kWeightsBin, blob.data(), blob.size());
  const std::string text = meta.dump(2) + "\n";
  write_whole(dir / kModelJson, text.data(), text.size());
}

Artifact read_artifact(const fs::path& dir) {
  Artifact a;
  a.dir = dir;
  std::vector<std::uint8_t> json_bytes;
  std::vector<std::uint8_t> blob;
  try {
    json_bytes = read_file(dir / kModelJson);
    blob = read_file(dir / kWeightsBin);
  } catch (const Error& e) {
    load_error(dir, e.what());
  }
  try {
    a.meta = nlohmann::json::parse(json_bytes.begin(), json_bytes.end());
    const int version = a.meta.at("schema_version").get<int>();
    if (version != kArtifactSchemaVersion) {
      load_error(dir, "unsupported schema_version " + std::to_string(version));
    }
    std::size_t expected_end = 0;
    for (const auto& entry : a.meta.at("tensors")) {
      TensorData t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const std::size_t bytes = element_count(t.shape) * 4;
      if (offset != expected_end) {
        load_error(dir, "tensor '" + t.name + "' offset " + std::to_string(offset) +
                            " is not contiguous (expected " + std::to_string(expected_end) + ")");
      }
      if (offset + bytes > blob.size()) {
        load_error(dir, "tensor '" + t.name + "' extends past the end of weights.bin (" +
                            std::to_string(offset + bytes) + " > " +
                            std::to_string(blob.size()) + " bytes)");
      }
      t.values.resize(element_count(t.shape));
      for (std::size_t i = 0; i < t.values.size(); ++i) {
        t.values[i] = read_le(blob.data() + offset + 4 * i);
      }
      expected_end = offset + bytes;
      a.tensors.push_back(std::move(t));
    }
    if (expected_end != blob.size()) {
      load_error(dir, "weights.bin has " + std::to_string(blob.size() - expected_end) +
                          " trailing bytes");
    }
  } catch (const nlohmann::json::exception& e) {
    load_error(dir, std::string("malformed model.json: ") + e.what());
  }
  return a;
}

TensorData to_tensor_data(const std::string& name, const Eigen::MatrixXd& m) {
  TensorData t{name, {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, {}};
  t.values.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(static_cast<float>(m(r, c)));
  }
  return t;
}

TensorData to_tensor_data(const std::string& name, const Eigen::RowVectorXd& v) {
  TensorData t{name, {static_cast<std::size_t>(v.size())}, {}};
  for (Eigen::Index i = 0; i < v.size(); ++i) t.values.push_back(static_cast<float>(v(i)));
  return t;
}

Eigen::MatrixXd matrix_from(const TensorData& t) {
  const auto rows = static_cast<Eigen::Index>(t.shape.at(0));
  const auto cols = static_cast<Eigen::Index>(t.shape.at(1));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = t.values[r * cols + c];
  }
  return m;
}

Eigen::RowVectorXd row_vector_from(const TensorData& t) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(t.values.size()));
  for (std::size_t i = 0; i < t.values.size(); ++i) v(static_cast<Eigen::Index>(i)) = t.values[i];
  return v;
}

}  // namespace taurus
