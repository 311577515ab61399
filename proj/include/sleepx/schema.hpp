/*
 * Copyright 2026 The sleepx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Feature schema for sleep-health records: 14 per-time-step features, their
// domains, encoding roles and counterfactual mutability.

#ifndef SLEEPX_SCHEMA_HPP_
#define SLEEPX_SCHEMA_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sleepx/error.hpp"

namespace sleepx {

enum class FeatureKind { kContinuous, kOrdinal, kCategorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  double min = 0.0;  // numeric domain, inclusive
  double max = 0.0;
  bool integer = false;      // values live on an integer grid
  bool model_input = true;   // encoded into the model tensor
  bool in_csv = true;        // read from / written to the CSV layout
  bool immutable = false;    // never changed by counterfactual search
  bool subject_level = false;  // one value per subject, shared by all steps
  std::vector<std::string> categories;  // known values (categorical only)
  std::string unit;

  bool categorical() const { return kind == FeatureKind::kCategorical; }
  bool numeric() const { return !categorical(); }
};

enum class Label { kNone = 0, kInsomnia = 1, kSleepApnea = 2 };

inline const std::vector<std::string>& class_names() {
  static const std::vector<std::string> names = {"None", "Insomnia",
                                                 "Sleep Apnea"};
  return names;
}

inline std::string label_name(Label label) {
  return class_names()[static_cast<std::size_t>(label)];
}

inline Label parse_label(const std::string& text) {
  const auto& names = class_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (text == names[i]) return static_cast<Label>(i);
  }
  if (text == "SleepApnea" || text == "Sleep_Apnea") return Label::kSleepApnea;
  throw SchemaError("unknown sleep_disorder value '" + text +
                    "' (None|Insomnia|Sleep Apnea)");
}

inline bool is_disorder(Label label) { return label != Label::kNone; }

class Schema {
 public:
  explicit Schema(std::vector<FeatureSpec> features)
      : features_(std::move(features)) {}

  // The default layout. Blood pressure is split into systolic/diastolic and a
  // socioeconomic ordinal is included, giving 14 features. physical_activity
  // is derived from activity_raw_minutes during preprocessing; the raw value
  // is kept for audit only.
  static const Schema& sleep_health() {
    static const Schema schema([] {
      std::vector<FeatureSpec> f;
      auto add = [&f](FeatureSpec spec) { f.push_back(std::move(spec)); };
      add({.name = "age", .kind = FeatureKind::kContinuous, .min = 0,
           .max = 120, .integer = true, .immutable = true,
           .subject_level = true, .unit = "years"});
      add({.name = "gender", .kind = FeatureKind::kCategorical,
           .immutable = true, .subject_level = true,
           .categories = {"Female", "Male"}});
      add({.name = "occupation", .kind = FeatureKind::kCategorical,
           .subject_level = true,
           .categories = {"Accountant", "Doctor", "Engineer", "Lawyer", "Nurse",
                          "Salesperson", "Teacher"}});
      add({.name = "socioeconomic", .kind = FeatureKind::kOrdinal, .min = 1,
           .max = 5, .integer = true, .subject_level = true});
      add({.name = "sleep_duration", .kind = FeatureKind::kContinuous,
           .min = 0.5, .max = 24, .unit = "hours"});
      add({.name = "quality_of_sleep", .kind = FeatureKind::kOrdinal, .min = 1,
           .max = 10, .integer = true});
      add({.name = "physical_activity", .kind = FeatureKind::kContinuous,
           .min = 30, .max = 90, .in_csv = false, .unit = "minutes"});
      add({.name = "stress_level", .kind = FeatureKind::kOrdinal, .min = 1,
           .max = 10, .integer = true});
      add({.name = "bmi_category", .kind = FeatureKind::kCategorical,
           .subject_level = true,
           .categories = {"Normal", "Obese", "Overweight"}});
      add({.name = "systolic_bp", .kind = FeatureKind::kContinuous, .min = 60,
           .max = 250, .unit = "mmHg"});
      add({.name = "diastolic_bp", .kind = FeatureKind::kContinuous, .min = 30,
           .max = 150, .unit = "mmHg"});
      add({.name = "heart_rate", .kind = FeatureKind::kContinuous, .min = 30,
           .max = 220, .subject_level = true, .unit = "bpm"});
      add({.name = "daily_steps", .kind = FeatureKind::kContinuous, .min = 0,
           .max = 100000, .integer = true, .unit = "steps"});
      add({.name = "activity_raw_minutes", .kind = FeatureKind::kContinuous,
           .min = 0, .max = 1440, .model_input = false, .unit = "minutes"});
      return f;
    }());
    return schema;
  }

  const std::vector<FeatureSpec>& features() const { return features_; }
  std::size_t size() const { return features_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_.at(i); }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
      if (features_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::size_t index_of(const std::string& name) const {
    if (auto i = find(name)) return *i;
    throw SchemaError("unknown feature '" + name + "'");
  }

  // Indices of the features that reach the model, in encoding order.
  std::vector<std::size_t> model_inputs() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < features_.size(); ++i) {
      if (features_[i].model_input) out.push_back(i);
    }
    return out;
  }

  std::vector<std::string> immutable_features() const {
    std::vector<std::string> out;
    for (const auto& f : features_) {
      if (f.immutable) out.push_back(f.name);
    }
    return out;
  }

  // CSV header: subject_id, timestep, the in-CSV features, sleep_disorder.
  std::vector<std::string> csv_header() const {
    std::vector<std::string> out = {"subject_id", "timestep"};
    for (const auto& f : features_) {
      if (f.in_csv && f.name != "activity_raw_minutes") out.push_back(f.name);
      // The raw activity column sits where the derived feature is reported.
      if (f.name == "physical_activity") out.push_back("activity_raw_minutes");
    }
    out.push_back("sleep_disorder");
    return out;
  }

 private:
  std::vector<FeatureSpec> features_;
};

// Index constants for the default schema.
namespace feature {
inline constexpr std::size_t kAge = 0;
inline constexpr std::size_t kGender = 1;
inline constexpr std::size_t kOccupation = 2;
inline constexpr std::size_t kSocioeconomic = 3;
inline constexpr std::size_t kSleepDuration = 4;
inline constexpr std::size_t kQualityOfSleep = 5;
inline constexpr std::size_t kPhysicalActivity = 6;
inline constexpr std::size_t kStressLevel = 7;
inline constexpr std::size_t kBmiCategory = 8;
inline constexpr std::size_t kSystolicBp = 9;
inline constexpr std::size_t kDiastolicBp = 10;
inline constexpr std::size_t kHeartRate = 11;
inline constexpr std::size_t kDailySteps = 12;
inline constexpr std::size_t kActivityRawMinutes = 13;
inline constexpr std::size_t kCount = 14;
}  // namespace feature

}  // namespace sleepx

#endif  // SLEEPX_SCHEMA_HPP_
