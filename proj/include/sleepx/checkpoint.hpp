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

// Model checkpoints: a trained classifier bundled with the normalization
// statistics it was trained under. Stored as one JSON document:
//
//   {
//     "format": "sleepx-checkpoint",
//     "schema_version": 1,
//     "arch": "lstm" | "tcn" | "tft",
//     "seed": <uint64>,
//     "hyperparameters": {"input_size", "hidden_size", "n_classes",
//                         "tcn_channels", "tcn_kernel", "tcn_levels"},
//     "normalization": {"activity_min", "activity_max", "warnings": [...],
//                       "features": [{"name", "impute_value", "mean",
//                                     "scale", "mad", "vocabulary",
//                                     "impute_category"}, ...]},
//     "weights": {"<parameter name>": {"shape": [...], "data": [...]}, ...}
//   }
//
// Numbers are written in shortest round-trip form, so load(save(c)) is
// bit-identical.

#ifndef SLEEPX_CHECKPOINT_HPP_
#define SLEEPX_CHECKPOINT_HPP_

#include <openssl/evp.h>

#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleepx/dataio.hpp"
#include "sleepx/error.hpp"
#include "sleepx/models.hpp"
#include "sleepx/ops.hpp"
#include "sleepx/schema.hpp"

namespace sleepx {

inline constexpr int kCheckpointSchemaVersion = 1;
inline constexpr const char* kCheckpointFormat = "sleepx-checkpoint";

struct ModelCheckpoint {
  SequenceClassifier model;
  NormalizationStats stats;
  std::uint64_t seed = 0;
  int schema_version = kCheckpointSchemaVersion;

  Arch arch() const { return model.arch; }
  FeatureEncoder encoder() const { return FeatureEncoder(stats); }
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json stats_to_json(const NormalizationStats& stats,
                                    const Schema& schema = Schema::sleep_health()) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t f = 0; f < stats.features.size(); ++f) {
    const auto& fs = stats.features[f];
    features.push_back({{"name", schema[f].name},
                        {"impute_value", fs.impute_value},
                        {"mean", fs.mean},
                        {"scale", fs.scale},
                        {"mad", fs.mad},
                        {"vocabulary", fs.vocabulary},
                        {"impute_category", fs.impute_category}});
  }
  return {{"activity_min", stats.activity_min},
          {"activity_max", stats.activity_max},
          {"warnings", stats.warnings},
          {"features", std::move(features)}};
}

inline NormalizationStats stats_from_json(const nlohmann::json& j,
                                          const Schema& schema = Schema::sleep_health()) {
  NormalizationStats stats;
  stats.activity_min = j.at("activity_min").get<double>();
  stats.activity_max = j.at("activity_max").get<double>();
  stats.warnings = j.at("warnings").get<std::vector<std::string>>();
  const auto& features = j.at("features");
  if (features.size() != schema.size()) {
    throw SchemaError("checkpoint normalization has " +
                      std::to_string(features.size()) + " features, schema has " +
                      std::to_string(schema.size()));
  }
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& item = features[f];
    if (item.at("name").get<std::string>() != schema[f].name) {
      throw SchemaError("checkpoint feature " + std::to_string(f) + " is '" +
                        item.at("name").get<std::string>() + "', schema expects '" +
                        schema[f].name + "'");
    }
    FeatureStats fs;
    fs.impute_value = item.at("impute_value").get<double>();
    fs.mean = item.at("mean").get<double>();
    fs.scale = item.at("scale").get<double>();
    fs.mad = item.at("mad").get<double>();
    fs.vocabulary = item.at("vocabulary").get<std::vector<std::string>>();
    fs.impute_category = item.at("impute_category").get<std::string>();
    if (!(fs.scale > 0.0)) {
      throw SchemaError("checkpoint scale for '" + schema[f].name +
                        "' is not positive");
    }
    stats.features.push_back(std::move(fs));
  }
  return stats;
}

inline nlohmann::json checkpoint_to_json(const ModelCheckpoint& ckpt) {
  const auto& h = ckpt.model.hyper;
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [name, t] : ckpt.model.named_parameters()) {
    weights[name] = {{"shape", t.shape()}, {"data", t.values()}};
  }
  return {{"format", kCheckpointFormat},
          {"schema_version", ckpt.schema_version},
          {"arch", arch_name(ckpt.model.arch)},
          {"seed", ckpt.seed},
          {"hyperparameters",
           {{"input_size", h.input_size},
            {"hidden_size", h.hidden_size},
            {"n_classes", h.n_classes},
            {"tcn_channels", h.tcn_channels},
            {"tcn_kernel", h.tcn_kernel},
            {"tcn_levels", h.tcn_levels}}},
          {"normalization", stats_to_json(ckpt.stats)},
          {"weights", std::move(weights)}};
}

inline ModelCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw SchemaError("not a sleepx checkpoint");
    }
    const int version = j.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion) {
      throw SchemaError("unsupported checkpoint schema_version " +
                        std::to_string(version));
    }
    ModelCheckpoint ckpt;
    ckpt.schema_version = version;
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    const auto& hj = j.at("hyperparameters");
    Hyperparameters h;
    h.input_size = hj.at("input_size").get<std::size_t>();
    h.hidden_size = hj.at("hidden_size").get<std::size_t>();
    h.n_classes = hj.at("n_classes").get<std::size_t>();
    h.tcn_channels = hj.at("tcn_channels").get<std::size_t>();
    h.tcn_kernel = hj.at("tcn_kernel").get<std::size_t>();
    h.tcn_levels = hj.at("tcn_levels").get<std::size_t>();
    ckpt.stats = stats_from_json(j.at("normalization"));
    // Build the parameter layout, then overwrite every tensor from the file.
    ckpt.model = SequenceClassifier::init(parse_arch(j.at("arch").get<std::string>()),
                                          h, 0);
    const auto& weights = j.at("weights");
    const auto named = ckpt.model.named_parameters();
    if (weights.size() != named.size()) {
      throw SchemaError("checkpoint has " + std::to_string(weights.size()) +
                        " weight arrays, architecture needs " +
                        std::to_string(named.size()));
    }
    for (const auto& [name, t] : named) {
      const auto& w = weights.at(name);
      const auto shape = w.at("shape").get<Shape>();
      if (shape != t.shape()) {
        throw SchemaError("weight '" + name + "' has shape " + shape_str(shape) +
                          ", expected " + shape_str(t.shape()));
      }
      const auto data = w.at("data").get<std::vector<double>>();
      if (data.size() != t.numel()) {
        throw SchemaError("weight '" + name + "' has " +
                          std::to_string(data.size()) + " values");
      }
      Tensor handle = t;
      std::copy(data.begin(), data.end(), handle.mutable_data().begin());
    }
    const std::size_t width = FeatureEncoder(ckpt.stats).width();
    if (width != h.input_size) {
      throw SchemaError("checkpoint input_size " + std::to_string(h.input_size) +
                        " does not match encoded width " + std::to_string(width));
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline std::string checkpoint_dump(const ModelCheckpoint& ckpt) {
  return checkpoint_to_json(ckpt).dump() + "\n";
}

inline void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << checkpoint_dump(ckpt);
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("'" + path + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

// Content hash of the serialized checkpoint.
inline std::string checkpoint_hash(const ModelCheckpoint& ckpt) {
  return sha256_hex(checkpoint_dump(ckpt));
}

// ---------------------------------------------------------------------------
// Inference

struct Prediction {
  std::vector<double> probs;  // [n_classes]
  std::size_t predicted = 0;
  Tensor hidden_states;       // [T x D]
  std::optional<Tensor> attention_scores;   // [T]
  std::optional<Tensor> selection_weights;  // [T x F]
};

// `seq` is an encoded [T x F] tensor.
inline Prediction classifier_predict(const ModelCheckpoint& ckpt, const Tensor& seq) {
  if (seq.rank() != 2) {
    throw DimensionError("classifier_predict expects [T x F], got " +
                         shape_str(seq.shape()));
  }
  NoGradGuard no_grad;
  const ClassifierOutput out = classifier_forward(ckpt.model, seq);
  Prediction p;
  p.probs = out.probs.values();
  p.predicted = static_cast<std::size_t>(
      std::max_element(p.probs.begin(), p.probs.end()) - p.probs.begin());
  const std::size_t steps = seq.shape()[0];
  p.hidden_states = reshape(out.hidden_states,
                            {steps, out.hidden_states.shape()[2]});
  if (out.attention_scores) p.attention_scores = reshape(*out.attention_scores, {steps});
  if (out.selection_weights) {
    p.selection_weights = reshape(*out.selection_weights, {steps, seq.shape()[1]});
  }
  return p;
}

// Raw (unpreprocessed) sequence through the checkpoint's own statistics.
inline Prediction predict_sequence(const ModelCheckpoint& ckpt,
                                   const PatientSequence& raw) {
  const auto clean = preprocess({raw}, ckpt.stats);
  return classifier_predict(ckpt, ckpt.encoder().encode(clean.front()));
}

// Class probabilities for many encoded sequences of equal length [B x T x F].
inline Tensor predict_batch(const SequenceClassifier& model, const Tensor& batch) {
  NoGradGuard no_grad;
  return classifier_forward(model, batch).probs;
}

}  // namespace sleepx

#endif  // SLEEPX_CHECKPOINT_HPP_
