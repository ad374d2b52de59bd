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

#include "taurus/eval_report.hpp"

#include <ostream>

#include "taurus/error.hpp"

namespace taurus {

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

EvalReport evaluate_manifest(const Manifest& manifest, const LabelSpace& model_space,
                             const EntryPredictor& predict) {
  if (manifest.entries.empty()) fail(ErrorKind::validation, "cannot evaluate an empty manifest");
  if (manifest.task() != model_space.task()) {
    fail(ErrorKind::validation, "manifest task " + std::string(to_string(manifest.task())) +
                                    " does not match model task " +
                                    std::string(to_string(model_space.task())));
  }
  for (const auto& e : manifest.entries) {
    if (!model_space.contains(e.label)) {
      fail(ErrorKind::validation, "label '" + e.label + "' is not in the model's label space");
    }
  }

  EvalReport report;
  report.space = model_space;
  const std::size_t n = model_space.size();
  report.confusion.assign(n, std::vector<std::size_t>(n, 0));
  std::size_t correct = 0;
  for (const auto& e : manifest.entries) {
    EvalRow row{e.path, e.label, {}, 0, std::nullopt};
    try {
      const Prediction p = predict(e);
      row.predicted = p.label;
      row.confidence_percent = confidence_percent(p.confidence);
      ++report.confusion[*model_space.index_of(e.label)][p.index];
      if (p.label == e.label) ++correct;
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::media && err.kind() != ErrorKind::io) throw;
      row.error = err.what();
      ++report.error_count;
    }
    report.rows.push_back(std::move(row));
  }
  const std::size_t evaluated = report.rows.size() - report.error_count;
  report.accuracy = evaluated == 0 ? 0.0 : static_cast<double>(correct) / evaluated;
  return report;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "item,actual,predicted,confidence_percent\n";
  for (const auto& r : report.rows) {
    out << csv_quote(r.item) << ',' << csv_quote(r.actual) << ',';
    if (!r.error) out << csv_quote(r.predicted) << ',' << r.confidence_percent;
    else out << ',';
    out << '\n';
  }
}

nlohmann::json confusion_json(const EvalReport& report) {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& r : report.rows) {
    if (r.error) errors.push_back({{"item", r.item}, {"error", *r.error}});
  }
  return {{"labels", report.space.labels()},
          {"confusion", report.confusion},
          {"accuracy", report.accuracy},
          {"evaluated", report.rows.size() - report.error_count},
          {"errors", std::move(errors)}};
}

}  // namespace taurus
