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
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "taurus/dosage.hpp"
#include "taurus/taxonomy.hpp"

namespace taurus {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// 128 random bits, 32 hex characters.
std::string new_case_id();

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

struct MediaRef {
  std::string digest;
  std::string kind;  // "image", "video", "frameset"
  std::size_t bytes = 0;
};

struct TimelineEntry {
  std::string type;  // "media", "prediction", "dose_plan"
  std::size_t index = 0;
};

struct CaseRecord {
  std::string case_id;
  std::string created_at;
  std::vector<MediaRef> media;
  std::vector<Prediction> predictions;
  std::optional<DosePlan> dose_plan;
  std::vector<TimelineEntry> timeline;
};

void to_json(nlohmann::json& j, const MediaRef& m);
void to_json(nlohmann::json& j, const CaseRecord& record);

/// Persistent case records: a JSON-lines append log (`cases.log`) replayed on
/// open, and uploads stored under `blobs/<sha256>`. Thread-safe.
class CaseStore {
 public:
  explicit CaseStore(std::filesystem::path dir);
  ~CaseStore();
  CaseStore(const CaseStore&) = delete;
  CaseStore& operator=(const CaseStore&) = delete;

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path log_path() const { return dir_ / "cases.log"; }
  std::filesystem::path blob_path(const std::string& digest) const;

  /// Stores the upload content-addressed and returns its reference.
  MediaRef put_blob(std::span<const std::uint8_t> bytes, const std::string& kind);

  /// Appends media and prediction to `case_id`, creating a new case when none
  /// is given. Unknown ids throw not_found. Returns the case id.
  std::string record_prediction(const std::optional<std::string>& case_id, const MediaRef& media,
                                const Prediction& prediction);

  /// Sets the case's dose plan. Unknown ids throw not_found.
  void record_dose_plan(const std::string& case_id, const DosePlan& plan);

  std::string create_case();

  bool contains(const std::string& case_id) const;
  std::optional<CaseRecord> get(const std::string& case_id) const;
  std::size_t size() const;

  /// Every record, keyed by id, as JSON. Two stores with equal snapshots hold
  /// the same data.
  nlohmann::json snapshot() const;

 private:
  void replay();
  void apply(const nlohmann::json& event);
  void append(const nlohmann::json& event);
  std::string create_locked();

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, CaseRecord> cases_;
  int log_fd_ = -1;
};

}  // namespace taurus
