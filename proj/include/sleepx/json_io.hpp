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

// JSON form of patient sequences, shared by the service and the CLI:
//
//   {"subject_id": "S001",
//    "records": [{"timestep": 0, "age": 41, "gender": "Male", ...}, ...],
//    "sleep_disorder": "Insomnia"}
//
// A feature that is absent or null is missing. "sleep_disorder" is optional.

#ifndef SLEEPX_JSON_IO_HPP_
#define SLEEPX_JSON_IO_HPP_

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleepx/dataio.hpp"
#include "sleepx/error.hpp"
#include "sleepx/schema.hpp"

namespace sleepx {

inline nlohmann::json cell_to_json(const Cell& cell) {
  if (const double* v = std::get_if<double>(&cell)) return *v;
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  return nullptr;
}

inline nlohmann::json sequence_to_json(const PatientSequence& seq,
                                       const Schema& schema = Schema::sleep_health()) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& fv : seq.timesteps) {
    nlohmann::json r = nlohmann::json::object();
    r["timestep"] = fv.timestep;
    for (std::size_t f = 0; f < schema.size(); ++f) r[schema[f].name] = cell_to_json(fv.cells[f]);
    records.push_back(std::move(r));
  }
  nlohmann::json j = {{"subject_id", seq.subject_id}, {"records", std::move(records)}};
  j["sleep_disorder"] = seq.label ? nlohmann::json(label_name(*seq.label)) : nlohmann::json(nullptr);
  return j;
}

// Same integrity rules as the CSV reader: unknown feature names, wrong value
// types, duplicate time steps and empty sequences are rejected.
inline PatientSequence sequence_from_json(const nlohmann::json& j,
                                          const Schema& schema = Schema::sleep_health()) {
  if (!j.is_object()) throw SchemaError("sequence must be a JSON object");
  PatientSequence seq;
  if (auto it = j.find("subject_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError("subject_id must be a string");
    seq.subject_id = it->get<std::string>();
  }
  const auto records = j.find("records");
  if (records == j.end() || !records->is_array() || records->empty()) {
    throw SchemaError("sequence needs a non-empty 'records' array");
  }
  for (const auto& r : *records) {
    if (!r.is_object()) throw SchemaError("each record must be a JSON object");
    const auto ts = r.find("timestep");
    if (ts == r.end() || !ts->is_number_integer()) {
      throw SchemaError("each record needs an integer 'timestep'");
    }
    FeatureVector fv = empty_feature_vector(schema, ts->get<std::int64_t>());
    for (const auto& [key, value] : r.items()) {
      if (key == "timestep") continue;
      const auto f = schema.find(key);
      if (!f) throw SchemaError("unknown feature '" + key + "'");
      if (value.is_null()) continue;
      if (schema[*f].categorical()) {
        if (!value.is_string()) throw SchemaError("feature '" + key + "' must be a string");
        fv.cells[*f] = value.get<std::string>();
      } else {
        if (!value.is_number()) throw SchemaError("feature '" + key + "' must be a number");
        fv.cells[*f] = value.get<double>();
      }
    }
    seq.timesteps.push_back(std::move(fv));
  }
  std::stable_sort(seq.timesteps.begin(), seq.timesteps.end(),
                   [](const FeatureVector& a, const FeatureVector& b) {
                     return a.timestep < b.timestep;
                   });
  for (std::size_t t = 1; t < seq.timesteps.size(); ++t) {
    if (seq.timesteps[t].timestep == seq.timesteps[t - 1].timestep) {
      throw IntegrityError("duplicate timestep " + std::to_string(seq.timesteps[t].timestep) +
                           " for subject '" + seq.subject_id + "'");
    }
  }
  if (auto it = j.find("sleep_disorder"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError("sleep_disorder must be a string");
    seq.label = parse_label(it->get<std::string>());
  }
  return seq;
}

}  // namespace sleepx

#endif  // SLEEPX_JSON_IO_HPP_
