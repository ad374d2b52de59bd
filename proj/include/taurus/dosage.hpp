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

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace taurus {

/// The only pound-to-kilogram conversion in the code base.
inline constexpr double kKilogramsPerPound = 0.45359237;

// Dentition age bands, youngest first.
enum class AgeBand { under_2, y2, y3, y4, y5, over_6, about_12 };

inline constexpr std::array<AgeBand, 7> kAllAgeBands = {
    AgeBand::under_2, AgeBand::y2,     AgeBand::y3,      AgeBand::y4,
    AgeBand::y5,      AgeBand::over_6, AgeBand::about_12};

std::string_view to_string(AgeBand band) noexcept;
AgeBand parse_age_band(std::string_view name);
/// "Less than 2 years old", "2 years old", ..., "About 12 years".
std::string_view display_text(AgeBand band) noexcept;

struct DentitionObservation {
  int permanent_incisors = 0;  // one of 0, 2, 4, 6, 8, 10
  bool all_present = false;
  bool extreme_wear_or_missing = false;
};

struct AgeEstimate {
  AgeBand band = AgeBand::under_2;
  std::string_view text() const noexcept { return display_text(band); }
};

/// Incisor-count aging. Precedence: extreme wear or missing teeth, then a
/// full mouth, then the count. Odd or out-of-range counts are rejected.
AgeEstimate age_from_dentition(const DentitionObservation& obs);

enum class WeightGroup { LB_93_177, LB_183_278, LB_259_548, LB_ABOVE_498, Unknown };

inline constexpr std::array<WeightGroup, 5> kAllWeightGroups = {
    WeightGroup::LB_93_177, WeightGroup::LB_183_278, WeightGroup::LB_259_548,
    WeightGroup::LB_ABOVE_498, WeightGroup::Unknown};

struct WeightBracket {
  double low_lbs = 0.0;
  double high_lbs = 0.0;
};

std::string_view to_string(WeightGroup group) noexcept;
/// The weight classifier's class label for the group ("93lbs-177lbs_Body").
std::string_view class_label(WeightGroup group) noexcept;
/// Accepts either the group id or its classifier label.
WeightGroup parse_weight_group(std::string_view name);

std::optional<WeightBracket> bracket_lbs(WeightGroup group) noexcept;
std::optional<double> representative_lbs(WeightGroup group) noexcept;

/// Bracket midpoint in kilograms. Unknown throws needs_manual_weighing.
double weight_kg(WeightGroup group);

struct DrugRule {
  std::string disease;
  std::string drug;
  double dose_mg_per_kg = 0.0;
  std::string route;
  int times_per_day = 1;
  int duration_days = 1;
  std::optional<AgeBand> min_age_band;
  std::string notes;
};

struct DosePlan {
  std::string drug;
  std::string disease;
  double weight_kg_used = 0.0;
  double dose_mg = 0.0;  // per administration
  int times_per_day = 1;
  int duration_days = 1;
  std::string route;
  std::vector<std::string> warnings;
  std::string notes;
};

/// Parses and validates a registry: a JSON array of DrugRule objects. Doses
/// must be positive and every disease must be a disease or behavior label.
std::vector<DrugRule> parse_registry(const nlohmann::json& j);
std::vector<DrugRule> load_registry(const std::filesystem::path& path);

/// First matching rule in registry order whose minimum age the animal meets.
/// Age-blocked rules add a warning; other eligible rules are listed in notes.
/// Errors: no_rule, needs_manual_weighing, contraindication.
DosePlan recommend_dose(std::string_view disease, AgeBand age, WeightGroup weight,
                        std::span<const DrugRule> registry);

void to_json(nlohmann::json& j, const DrugRule& rule);
void to_json(nlohmann::json& j, const DosePlan& plan);
DosePlan dose_plan_from_json(const nlohmann::json& j);

}  // namespace taurus
