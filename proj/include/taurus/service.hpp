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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "taurus/backbone.hpp"
#include "taurus/case_store.hpp"
#include "taurus/dosage.hpp"
#include "taurus/error.hpp"
#include "taurus/image_head.hpp"
#include "taurus/sequence_head.hpp"
#include "taurus/taxonomy.hpp"

namespace httplib {
class Server;
}

namespace taurus {

struct LoadedModel {
  std::variant<HeadModel, SequenceHead> model;
  std::shared_ptr<const Backbone> backbone;
  std::filesystem::path source;
  std::string loaded_at;
};

/// Task -> model. Immutable once built.
class ModelRegistry {
 public:
  void add(TaskId task, LoadedModel model);
  const LoadedModel* find(TaskId task) const noexcept;
  std::vector<TaskId> tasks() const;
  std::size_t size() const noexcept { return models_.size(); }

 private:
  std::map<TaskId, LoadedModel> models_;
};

/// Loads every artifact subdirectory of `dir`. Each must carry its task's
/// canonical label space; two artifacts for one task is an error.
ModelRegistry load_models(const std::filesystem::path& dir);

inline constexpr std::size_t kMaxImageBytes = 10u << 20;
inline constexpr std::size_t kMaxVideoBytes = 100u << 20;

/// HTTP status for an error kind.
int http_status(ErrorKind kind) noexcept;

struct PredictOutcome {
  Prediction prediction;
  std::string case_id;
};

class Service {
 public:
  Service(ModelRegistry models, std::shared_ptr<CaseStore> cases, std::vector<DrugRule> drugs);

  /// Runs the task's pipeline on an upload and records it in a case.
  /// `filename` only hints the container type for video uploads.
  PredictOutcome handle_predict(TaskId task, std::span<const std::uint8_t> upload,
                                const std::string& filename,
                                const std::optional<std::string>& case_id);

  DosePlan handle_dose(const std::string& disease, AgeBand age, WeightGroup weight,
                       const std::optional<std::string>& case_id);

  CaseRecord get_case(const std::string& case_id) const;

  const ModelRegistry& models() const noexcept { return models_; }
  CaseStore& cases() noexcept { return *cases_; }

  /// Registers the REST routes, and a static mount at /ui when `ui_dir` is set.
  void mount(httplib::Server& server, const std::optional<std::filesystem::path>& ui_dir = {});

 private:
  ModelRegistry models_;
  std::shared_ptr<CaseStore> cases_;
  std::vector<DrugRule> drugs_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path model_dir;
  std::filesystem::path case_dir = "cases";
  std::optional<std::filesystem::path> registry;
  std::optional<std::filesystem::path> ui_dir;
};

/// Blocks until the server stops.
void serve(const ServeOptions& options);

}  // namespace taurus
