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

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "taurus/ingest.hpp"
#include "taurus/taxonomy.hpp"

namespace taurus {

struct EvalRow {
  std::string item;
  std::string actual;
  std::string predicted;
  int confidence_percent = 0;
  std::optional<std::string> error;  // set when the media could not be read
};

/// Result-table style report: one row per manifest entry in manifest order,
/// a confusion matrix indexed [actual][predicted], and accuracy over the rows
/// that did not error.
struct EvalReport {
  LabelSpace space;
  std::vector<EvalRow> rows;
  std::vector<std::vector<std::size_t>> confusion;
  double accuracy = 0.0;
  std::size_t error_count = 0;
};

using EntryPredictor = std::function<Prediction(const ManifestEntry&)>;

/// Runs `predict` over every entry. Media and I/O failures become error rows;
/// any other failure propagates.
EvalReport evaluate_manifest(const Manifest& manifest, const LabelSpace& model_space,
                             const EntryPredictor& predict);

/// CSV: item,actual,predicted,confidence_percent. Error rows leave the last
/// two fields empty.
void write_report_csv(const EvalReport& report, std::ostream& out);

/// {"labels", "confusion", "accuracy", "evaluated", "errors": [{item, error}]}
nlohmann::json confusion_json(const EvalReport& report);

}  // namespace taurus
