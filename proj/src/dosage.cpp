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

#include "taurus/dosage.hpp"

#include <fstream>

#include "taurus/error.hpp"
#include "taurus/taxonomy.hpp"

namespace taurus {

std::string_view to_string(AgeBand band) noexcept {
  switch (band) {
    case AgeBand::under_2: return "under_2";
    case AgeBand::y2: return "y2";
    case AgeBand::y3: return "y3";
    case AgeBand::y4: return "y4";
    case AgeBand::y5: return "y5";
    case AgeBand::over_6: return "over_6";
    case AgeBand::about_12: return "about_12";
  }
  return "under_2";
}

AgeBand parse_age_band(std::string_view name) {
  for (AgeBand b : kAllAgeBands) {
    if (to_string(b) == name) return b;
  }
  fail(ErrorKind::validation, "unknown age band '" + std::string(name) + "'");
}

std::string_view display_text(AgeBand band) noexcept {
  switch (band) {
    case AgeBand::under_2: return "Less than 2 years old";
    case AgeBand::y2: return "2 years old";
    case AgeBand::y3: return "3 years old";
    case AgeBand::y4: return "4 years old";
    case AgeBand::y5: return "5 years old";
    case AgeBand::over_6: return "Older than 6 years";
    case AgeBand::about_12: return "About 12 years";
  }
  return "";
}

AgeEstimate age_from_dentition(const DentitionObservation& obs) {
  const int n = obs.permanent_incisors;
  if (n < 0 || n > 10 || n % 2 != 0) {
    fail(ErrorKind::validation,
         "permanent incisor count must be one of 0, 2, 4, 6, 8, 10 (got " + std::to_string(n) + ")");
  }
  if (obs.extreme_wear_or_missing) return {AgeBand::about_12};
  if (obs.all_present) return {AgeBand::over_6};
  switch (n) {
    case 4: return {AgeBand::y2};
    case 6: return {AgeBand::y3};
    case 8: return {AgeBand::y4};
    case 10: return {AgeBand::y5};
    default: return {AgeBand::under_2};  // 0 or 2
  }
}

std::string_view to_string(WeightGroup group) noexcept {
  switch (group) {
    case WeightGroup::LB_93_177: return "LB_93_177";
    case WeightGroup::LB_183_278: return "LB_183_278";
    case WeightGroup::LB_259_548: return "LB_259_548";
    case WeightGroup::LB_ABOVE_498: return "LB_ABOVE_498";
    case WeightGroup::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view class_label(WeightGroup group) noexcept {
  switch (group) {
    case WeightGroup::LB_93_177: return "93lbs-177lbs_Body";
    case WeightGroup::LB_183_278: return "183lbs-278lbs_Body";
    case WeightGroup::LB_259_548: return "259lbs-548lbs_Body";
    case WeightGroup::LB_ABOVE_498: return "Above 498lbs_Body";
    case WeightGroup::Unknown: return "Unknown";
  }
  return "Unknown";
}

WeightGroup parse_weight_group(std::string_view name) {
  for (WeightGroup g : kAllWeightGroups) {
    if (to_string(g) == name || class_label(g) == name) return g;
  }
  fail(ErrorKind::validation, "unknown weight group '" + std::string(name) + "'");
}

std::optional<WeightBracket> bracket_lbs(WeightGroup group) noexcept {
  switch (group) {
    case WeightGroup::LB_93_177: return WeightBracket{93, 177};
    case WeightGroup::LB_183_278: return WeightBracket{183, 278};
    case WeightGroup::LB_259_548: return WeightBracket{259, 548};
    case WeightGroup::LB_ABOVE_498: return WeightBracket{498, 738};
    case WeightGroup::Unknown: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> representative_lbs(WeightGroup group) noexcept {
  const auto b = bracket_lbs(group);
  if (!b) return std::nullopt;
  return (b->low_lbs + b->high_lbs) / 2.0;
}

double weight_kg(WeightGroup group) {
  const auto lbs = representative_lbs(group);
  if (!lbs) {
    fail(ErrorKind::needs_manual_weighing,
         "weight group is Unknown; weigh the animal before dosing");
  }
  return *lbs * kKilogramsPerPound;
}

std::vector<DrugRule> parse_registry(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorKind::data, "drug registry must be a JSON array");
  const auto& diseases = canonical_label_space(TaskId::disease_image);
  const auto& behaviors = canonical_label_space(TaskId::behavior_video);
  std::vector<DrugRule> rules;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& o = j[i];
    const std::string where = "registry entry " + std::to_string(i);
    DrugRule r;
    try {
      r.disease = o.at("disease").get<std::string>();
      r.drug = o.at("drug").get<std::string>();
      r.dose_mg_per_kg = o.at("dose_mg_per_kg").get<double>();
      r.route = o.at("route").get<std::string>();
      r.times_per_day = o.at("times_per_day").get<int>();
      r.duration_days = o.at("duration_days").get<int>();
      if (o.contains("min_age_band") && !o.at("min_age_band").is_null()) {
        r.min_age_band = parse_age_band(o.at("min_age_band").get<std::string>());
      }
      r.notes = o.value("notes", "");
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::data, where + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::data, where + ": " + e.what());
    }
    if (!(r.dose_mg_per_kg > 0.0) || !std::isfinite(r.dose_mg_per_kg)) {
      fail(ErrorKind::data, where + ": dose_mg_per_kg must be positive");
    }
    if (r.times_per_day <= 0 || r.duration_days <= 0) {
      fail(ErrorKind::data, where + ": times_per_day and duration_days must be positive");
    }
    if (!diseases.contains(r.disease) && !behaviors.contains(r.disease)) {
      fail(ErrorKind::data, where + ": unknown disease label '" + r.disease + "'");
    }
    if (r.drug.empty()) fail(ErrorKind::data, where + ": drug is empty");
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<DrugRule> load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read drug registry '" + path.string() + "'");
  try {
    return parse_registry(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, "drug registry '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

DosePlan recommend_dose(std::string_view disease, AgeBand age, WeightGroup weight,
                        std::span<const DrugRule> registry) {
  std::vector<const DrugRule*> matching;
  for (const auto& r : registry) {
    if (r.disease == disease) matching.push_back(&r);
  }
  if (matching.empty()) {
    fail(ErrorKind::no_rule, "no drug rule for disease '" + std::string(disease) + "'");
  }
  const double kg = weight_kg(weight);

  std::vector<std::string> warnings;
  std::vector<const DrugRule*> eligible;
  for (const DrugRule* r : matching) {
    if (r->min_age_band && *r->min_age_band > age) {
      warnings.push_back(r->drug + " skipped: requires age band " +
                         std::string(to_string(*r->min_age_band)) + " or older (" +
                         std::string(display_text(*r->min_age_band)) + ")");
      continue;
    }
    eligible.push_back(r);
  }
  if (eligible.empty()) {
    fail(ErrorKind::contraindication, "every rule for '" + std::string(disease) +
                                          "' is contraindicated at age band " +
                                          std::string(to_string(age)));
  }

  const DrugRule& rule = *eligible.front();
  DosePlan plan;
  plan.drug = rule.drug;
  plan.disease = rule.disease;
  plan.weight_kg_used = kg;
  plan.dose_mg = rule.dose_mg_per_kg * kg;
  plan.times_per_day = rule.times_per_day;
  plan.duration_days = rule.duration_days;
  plan.route = rule.route;
  plan.warnings = std::move(warnings);
  plan.notes = rule.notes;
  if (eligible.size() > 1) {
    std::string alt = "Alternates:";
    for (std::size_t i = 1; i < eligible.size(); ++i) alt += (i > 1 ? ", " : " ") + eligible[i]->drug;
    plan.notes = plan.notes.empty() ? alt : plan.notes + " " + alt;
  }
  return plan;
}

void to_json(nlohmann::json& j, const DrugRule& r) {
  j = nlohmann::json{{"disease", r.disease},
                     {"drug", r.drug},
                     {"dose_mg_per_kg", r.dose_mg_per_kg},
                     {"route", r.route},
                     {"times_per_day", r.times_per_day},
                     {"duration_days", r.duration_days},
                     {"min_age_band", r.min_age_band ? nlohmann::json(to_string(*r.min_age_band))
                                                     : nlohmann::json(nullptr)},
                     {"notes", r.notes}};
}

void to_json(nlohmann::json& j, const DosePlan& p) {
  j = nlohmann::json{{"drug", p.drug},
                     {"disease", p.disease},
                     {"weight_kg_used", p.weight_kg_used},
                     {"dose_mg", p.dose_mg},
                     {"schedule", {{"times_per_day", p.times_per_day},
                                   {"duration_days", p.duration_days}}},
                     {"route", p.route},
                     {"warnings", p.warnings},
                     {"notes", p.notes}};
}

DosePlan dose_plan_from_json(const nlohmann::json& j) {
  try {
    DosePlan p;
    p.drug = j.at("drug").get<std::string>();
    p.disease = j.at("disease").get<std::string>();
    p.weight_kg_used = j.at("weight_kg_used").get<double>();
    p.dose_mg = j.at("dose_mg").get<double>();
    p.times_per_day = j.at("schedule").at("times_per_day").get<int>();
    p.duration_days = j.at("schedule").at("duration_days").get<int>();
    p.route = j.at("route").get<std::string>();
    p.warnings = j.at("warnings").get<std::vector<std::string>>();
    p.notes = j.value("notes", "");
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed dose plan: ") + e.what());
  }
}

}  // namespace taurus
