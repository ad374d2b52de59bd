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
#include <string>
#include <vector>

#include "json.hpp"

namespace taurus {

inline constexpr int kArtifactSchemaVersion = 1;
inline constexpr const char* kModelJson = "model.json";
inline constexpr const char* kWeightsBin = "weights.bin";

/// One named float32 tensor, row-major.
struct TensorData {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

struct Artifact {
  std::filesystem::path dir;
  nlohmann::json meta;
  std::vector<TensorData> tensors;

  /// Throws model_load naming the artifact when the tensor is absent or its
  /// shape differs from `expected_shape`.
  const TensorData& tensor(const std::string& name,
                           const std::vector<std::size_t>& expected_shape) const;
};

/// Writes model.json (meta plus schema_version and the tensor index) and
/// weights.bin (little-endian float32, concatenated in index order). Output
/// is byte-stable for identical inputs.
void write_artifact(const std::filesystem::path& dir, nlohmann::json meta,
                    const std::vector<TensorData>& tensors);

/// Reads and validates an artifact directory: schema version, index offsets
/// and shapes, and the exact byte length of weights.bin.
Artifact read_artifact(const std::filesystem::path& dir);

TensorData to_tensor_data(const std::string& name, const Eigen::MatrixXd& m);
TensorData to_tensor_data(const std::string& name, const Eigen::RowVectorXd& v);
Eigen::MatrixXd matrix_from(const TensorData& t);
Eigen::RowVectorXd row_vector_from(const TensorData& t);

/// Rounds every coefficient to the nearest float32 so that in-memory models
/// equal what a save/load round trip produces.
template <typename Derived>
void snap_to_float32(Eigen::MatrixBase<Derived>& m) {
  m = m.template cast<float>().template cast<double>();
}

}  // namespace taurus
