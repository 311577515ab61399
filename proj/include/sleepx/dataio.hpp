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

// Patient records: CSV ingestion, preprocessing (imputation, activity
// rescaling, unit conversion, per-subject heart-rate averaging), tensor
// encoding (z-scores and one-hot blocks), and a synthetic generator.

#ifndef SLEEPX_DATAIO_HPP_
#define SLEEPX_DATAIO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "sleepx/error.hpp"
#include "sleepx/random.hpp"
#include "sleepx/schema.hpp"
#include "sleepx/tensor.hpp"

namespace sleepx {

// Explicit missing-value marker; never produced by a valid reading.
struct Missing {
  bool operator==(const Missing&) const = default;
};

using Cell = std::variant<Missing, double, std::string>;

struct FeatureVector {
  std::int64_t timestep = 0;
  std::vector<Cell> cells;  // one per schema feature, schema order

  bool missing(std::size_t i) const {
    return std::holds_alternative<Missing>(cells.at(i));
  }
  double number(std::size_t i) const {
    if (const double* v = std::get_if<double>(&cells.at(i))) return *v;
    throw SchemaError("feature " + std::to_string(i) + " is not a number");
  }
  const std::string& category(std::size_t i) const {
    if (const auto* v = std::get_if<std::string>(&cells.at(i))) return *v;
    throw SchemaError("feature " + std::to_string(i) + " is not a category");
  }
  bool operator==(const FeatureVector&) const = default;
};

struct PatientSequence {
  std::string subject_id;
  std::vector<FeatureVector> timesteps;
  std::optional<Label> label;

  std::size_t length() const { return timesteps.size(); }
  bool operator==(const PatientSequence&) const = default;
};

inline FeatureVector empty_feature_vector(const Schema& schema,
                                          std::int64_t timestep) {
  return {timestep, std::vector<Cell>(schema.size(), Missing{})};
}

// Shortest decimal text that parses back to the same binary64.
inline std::string format_number(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

inline std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

// Groups rows by subject_id (first-appearance order) and orders each subject
// by the timestep column. Empty cells become Missing.
inline std::vector<PatientSequence> parse_csv_stream(
    std::istream& in, const Schema& schema = Schema::sleep_health()) {
  std::string line;
  std::size_t line_no = 0;
  // Skip leading blank lines; the first non-blank line is the header.
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line != "\r") break;
  }
  if (line.empty() || line == "\r") return {};
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
    line.erase(0, 3);  // UTF-8 BOM
  }
  const auto header = detail::split_csv_line(line);
  const auto expected = schema.csv_header();
  std::vector<std::optional<std::size_t>> column_feature(header.size());
  std::optional<std::size_t> subject_col, timestep_col, label_col;
  std::set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (!seen.insert(name).second) {
      throw SchemaError("duplicate column '" + name + "'");
    }
    if (name == "subject_id") {
      subject_col = c;
    } else if (name == "timestep") {
      timestep_col = c;
    } else if (name == "sleep_disorder") {
      label_col = c;
    } else if (auto f = schema.find(name); f && schema[*f].in_csv) {
      column_feature[c] = *f;
    } else {
      throw SchemaError("unknown column '" + name + "'");
    }
  }
  for (const auto& name : expected) {
    if (!seen.count(name)) throw SchemaError("missing column '" + name + "'");
  }

  std::vector<PatientSequence> out;
  std::map<std::string, std::size_t> subject_index;
  std::map<std::pair<std::size_t, std::int64_t>, std::size_t> seen_steps;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw RowError(line_no, "expected " + std::to_string(header.size()) +
                                  " fields, got " +
                                  std::to_string(fields.size()));
    }
    const std::string& subject = fields[*subject_col];
    if (subject.empty()) throw RowError(line_no, "empty subject_id");
    const auto step = parse_number(fields[*timestep_col]);
    if (!step || *step != std::floor(*step)) {
      throw RowError(line_no, "timestep '" + fields[*timestep_col] +
                                  "' is not an integer");
    }
    FeatureVector fv =
        empty_feature_vector(schema, static_cast<std::int64_t>(*step));
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (!column_feature[c]) continue;
      const std::size_t f = *column_feature[c];
      const std::string& text = fields[c];
      if (text.empty()) continue;
      if (schema[f].categorical()) {
        fv.cells[f] = text;
      } else if (auto v = parse_number(text)) {
        fv.cells[f] = *v;
      } else {
        throw RowError(line_no, "column '" + header[c] + "': cannot parse '" +
                                    text + "' as a number");
      }
    }
    auto [it, inserted] = subject_index.emplace(subject, out.size());
    if (inserted) out.push_back(PatientSequence{subject, {}, std::nullopt});
    PatientSequence& seq = out[it->second];
    if (!seen_steps.emplace(std::make_pair(it->second, fv.timestep), line_no)
             .second) {
      throw IntegrityError("line " + std::to_string(line_no) +
                           ": duplicate record for subject '" + subject +
                           "' timestep " + std::to_string(fv.timestep));
    }
    if (label_col && !fields[*label_col].empty()) {
      Label label;
      try {
        label = parse_label(fields[*label_col]);
      } catch (const SchemaError& e) {
        throw RowError(line_no, e.what());
      }
      if (seq.label && *seq.label != label) {
        throw IntegrityError("line " + std::to_string(line_no) +
                             ": conflicting sleep_disorder for subject '" +
                             subject + "'");
      }
      seq.label = label;
    }
    seq.timesteps.push_back(std::move(fv));
  }
  for (auto& seq : out) {
    std::stable_sort(seq.timesteps.begin(), seq.timesteps.end(),
                     [](const FeatureVector& a, const FeatureVector& b) {
                       return a.timestep < b.timestep;
                     });
  }
  return out;
}

inline std::vector<PatientSequence> parse_csv(
    const std::string& path, const Schema& schema = Schema::sleep_health()) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse_csv_stream(in, schema);
}

inline void write_csv(std::ostream& out, const std::vector<PatientSequence>& data,
                      const Schema& schema = Schema::sleep_health()) {
  const auto header = schema.csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << '\n';
  for (const auto& seq : data) {
    for (const auto& fv : seq.timesteps) {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        const std::string& col = header[i];
        if (col == "subject_id") {
          out << detail::csv_escape(seq.subject_id);
        } else if (col == "timestep") {
          out << fv.timestep;
        } else if (col == "sleep_disorder") {
          if (seq.label) out << detail::csv_escape(label_name(*seq.label));
        } else {
          const Cell& cell = fv.cells[schema.index_of(col)];
          if (const double* v = std::get_if<double>(&cell)) {
            out << format_number(*v);
          } else if (const auto* s = std::get_if<std::string>(&cell)) {
            out << detail::csv_escape(*s);
          }
        }
      }
      out << '\n';
    }
  }
}

inline void write_csv(const std::string& path,
                      const std::vector<PatientSequence>& data,
                      const Schema& schema = Schema::sleep_health()) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, data, schema);
}

// ---------------------------------------------------------------------------
// Preprocessing

struct FeatureStats {
  // Numeric features.
  double impute_value = 0.0;  // training median
  double mean = 0.0;
  double scale = 1.0;  // population standard deviation, 1 when degenerate
  double mad = 0.0;    // median absolute deviation around the median
  // Categorical features; the one-hot code of vocabulary[i] is i and any
  // unseen value maps to the trailing unknown slot.
  std::vector<std::string> vocabulary;
  std::string impute_category;

  bool operator==(const FeatureStats&) const = default;
};

struct NormalizationStats {
  std::vector<FeatureStats> features;  // schema order
  double activity_min = 0.0;           // raw minutes mapped to 30
  double activity_max = 0.0;           // raw minutes mapped to 90
  std::vector<std::string> warnings;

  bool fitted() const { return !features.empty(); }
  bool operator==(const NormalizationStats&) const = default;
};

inline constexpr double kActivityLow = 30.0;
inline constexpr double kActivityHigh = 90.0;
inline constexpr double kMinutesPerHour = 60.0;
inline constexpr const char* kUnknownCategory = "<unknown>";

namespace detail {

inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Steps that need no fitted statistics: sleep duration in hours and one
// heart-rate value per subject (mean of the available readings).
inline PatientSequence normalize_units(PatientSequence seq) {
  using namespace feature;
  double hr_total = 0.0;
  std::size_t hr_count = 0;
  for (auto& fv : seq.timesteps) {
    if (const double* v = std::get_if<double>(&fv.cells[kSleepDuration])) {
      // Durations longer than a day can only be minutes.
      if (*v > 24.0) fv.cells[kSleepDuration] = *v / kMinutesPerHour;
    }
    if (const double* v = std::get_if<double>(&fv.cells[kHeartRate])) {
      hr_total += *v;
      ++hr_count;
    }
  }
  if (hr_count > 0) {
    const double hr_mean = hr_total / static_cast<double>(hr_count);
    for (auto& fv : seq.timesteps) fv.cells[kHeartRate] = hr_mean;
  }
  return seq;
}

inline double rescale_activity(double raw, const NormalizationStats& stats) {
  const double span = stats.activity_max - stats.activity_min;
  if (!(span > 0.0)) return 0.5 * (kActivityLow + kActivityHigh);
  const double mapped =
      kActivityLow + (kActivityHigh - kActivityLow) * (raw - stats.activity_min) / span;
  return std::clamp(mapped, kActivityLow, kActivityHigh);
}

inline PatientSequence apply_stats(PatientSequence seq, const Schema& schema,
                                   const NormalizationStats& stats) {
  using namespace feature;
  seq = normalize_units(std::move(seq));
  for (auto& fv : seq.timesteps) {
    if (fv.cells.size() != schema.size()) {
      throw SchemaError("record for subject '" + seq.subject_id + "' has " +
                        std::to_string(fv.cells.size()) + " features, schema has " +
                        std::to_string(schema.size()));
    }
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (f == kPhysicalActivity || !fv.missing(f)) continue;
      if (schema[f].categorical()) {
        fv.cells[f] = stats.features[f].impute_category;
      } else {
        fv.cells[f] = stats.features[f].impute_value;
      }
    }
    fv.cells[kPhysicalActivity] =
        rescale_activity(fv.number(kActivityRawMinutes), stats);
  }
  return seq;
}

}  // namespace detail

struct PreprocessResult {
  std::vector<PatientSequence> sequences;
  NormalizationStats stats;
};

// Fits statistics on `raw` (the training partition) and applies them.
inline PreprocessResult preprocess(const std::vector<PatientSequence>& raw,
                                   const Schema& schema = Schema::sleep_health()) {
  using namespace feature;
  if (raw.empty()) throw ContractError("preprocess: cannot fit on empty data");
  std::vector<PatientSequence> units;
  units.reserve(raw.size());
  for (const auto& seq : raw) {
    if (seq.timesteps.empty()) {
      throw ContractError("subject '" + seq.subject_id + "' has no time steps");
    }
    units.push_back(detail::normalize_units(seq));
  }

  NormalizationStats stats;
  stats.features.resize(schema.size());
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (f == kPhysicalActivity) continue;
    auto& fs = stats.features[f];
    if (schema[f].categorical()) {
      std::map<std::string, std::size_t> counts;
      for (const auto& seq : units) {
        for (const auto& fv : seq.timesteps) {
          if (!fv.missing(f)) ++counts[fv.category(f)];
        }
      }
      std::set<std::string> vocab(schema[f].categories.begin(),
                                  schema[f].categories.end());
      std::size_t best = 0;
      for (const auto& [value, n] : counts) {
        vocab.insert(value);
        if (n > best) {
          best = n;
          fs.impute_category = value;
        }
      }
      if (counts.empty() && !schema[f].categories.empty()) {
        fs.impute_category = schema[f].categories.front();
      }
      fs.vocabulary.assign(vocab.begin(), vocab.end());
    } else {
      std::vector<double> values;
      for (const auto& seq : units) {
        for (const auto& fv : seq.timesteps) {
          if (!fv.missing(f)) values.push_back(fv.number(f));
        }
      }
      if (values.empty()) {
        stats.warnings.push_back("feature '" + schema[f].name +
                                 "' has no observed values; imputing 0");
      }
      fs.impute_value = detail::median(values);
      if (f == kActivityRawMinutes && !values.empty()) {
        stats.activity_min = *std::min_element(values.begin(), values.end());
        stats.activity_max = *std::max_element(values.begin(), values.end());
      }
    }
  }

  PreprocessResult result;
  for (auto& seq : units) {
    result.sequences.push_back(detail::apply_stats(std::move(seq), schema, stats));
  }

  // Scaling statistics on the cleaned values.
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (schema[f].categorical()) continue;
    auto& fs = stats.features[f];
    std::vector<double> values;
    for (const auto& seq : result.sequences) {
      for (const auto& fv : seq.timesteps) values.push_back(fv.number(f));
    }
    double total = 0.0;
    for (double v : values) total += v;
    fs.mean = total / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - fs.mean) * (v - fs.mean);
    var /= static_cast<double>(values.size());
    fs.scale = std::sqrt(var);
    if (!(fs.scale > 1e-12)) {
      fs.scale = 1.0;
      stats.warnings.push_back("feature '" + schema[f].name +
                               "' has zero variance; using scale 1");
    }
    const double med = detail::median(values);
    std::vector<double> dev;
    dev.reserve(values.size());
    for (double v : values) dev.push_back(std::abs(v - med));
    fs.mad = detail::median(std::move(dev));
  }
  result.stats = std::move(stats);
  return result;
}

// Applies previously fitted statistics; nothing is refit.
inline std::vector<PatientSequence> preprocess(
    const std::vector<PatientSequence>& raw, const NormalizationStats& stats,
    const Schema& schema = Schema::sleep_health()) {
  if (!stats.fitted() || stats.features.size() != schema.size()) {
    throw ContractError("preprocess: statistics do not match the schema");
  }
  std::vector<PatientSequence> out;
  out.reserve(raw.size());
  for (const auto& seq : raw) {
    if (seq.timesteps.empty()) {
      throw ContractError("subject '" + seq.subject_id + "' has no time steps");
    }
    out.push_back(detail::apply_stats(seq, schema, stats));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

// Encoded column ranges of one schema feature.
struct ColumnBlock {
  std::size_t feature = 0;  // schema index
  std::size_t offset = 0;
  std::size_t width = 0;
};

class FeatureEncoder {
 public:
  FeatureEncoder(const NormalizationStats& stats,
                 const Schema& schema = Schema::sleep_health())
      : stats_(&stats), schema_(&schema) {
    if (!stats.fitted() || stats.features.size() != schema.size()) {
      throw ContractError("encoder: statistics do not match the schema");
    }
    std::size_t offset = 0;
    for (std::size_t f : schema.model_inputs()) {
      const std::size_t width =
          schema[f].categorical() ? stats.features[f].vocabulary.size() + 1 : 1;
      blocks_.push_back({f, offset, width});
      offset += width;
    }
    width_ = offset;
  }

  std::size_t width() const { return width_; }
  const std::vector<ColumnBlock>& blocks() const { return blocks_; }

  const ColumnBlock& block_of(std::size_t feature) const {
    for (const auto& b : blocks_) {
      if (b.feature == feature) return b;
    }
    throw SchemaError("feature '" + (*schema_)[feature].name +
                      "' is not a model input");
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> names;
    for (const auto& b : blocks_) {
      const auto& spec = (*schema_)[b.feature];
      if (!spec.categorical()) {
        names.push_back(spec.name);
        continue;
      }
      for (const auto& v : stats_->features[b.feature].vocabulary) {
        names.push_back(spec.name + "=" + v);
      }
      names.push_back(spec.name + "=" + kUnknownCategory);
    }
    return names;
  }

  double encode_value(std::size_t feature, double value) const {
    const auto& fs = stats_->features[feature];
    return (value - fs.mean) / fs.scale;
  }
  double decode_value(std::size_t feature, double z) const {
    const auto& fs = stats_->features[feature];
    return z * fs.scale + fs.mean;
  }
  std::size_t category_code(std::size_t feature, const std::string& value) const {
    const auto& vocab = stats_->features[feature].vocabulary;
    auto it = std::lower_bound(vocab.begin(), vocab.end(), value);
    if (it != vocab.end() && *it == value) {
      return static_cast<std::size_t>(it - vocab.begin());
    }
    return vocab.size();
  }

  // Writes one time step into `row` (width() values).
  void encode_step(const FeatureVector& fv, double* row) const {
    for (const auto& b : blocks_) {
      if (fv.missing(b.feature)) {
        throw ContractError("encode: feature '" + (*schema_)[b.feature].name +
                            "' is missing; preprocess first");
      }
      if ((*schema_)[b.feature].categorical()) {
        std::fill_n(row + b.offset, b.width, 0.0);
        row[b.offset + category_code(b.feature, fv.category(b.feature))] = 1.0;
      } else {
        row[b.offset] = encode_value(b.feature, fv.number(b.feature));
      }
    }
  }

  // [T x width()] tensor for one preprocessed sequence.
  Tensor encode(const PatientSequence& seq) const {
    if (seq.timesteps.empty()) {
      throw ContractError("encode: subject '" + seq.subject_id +
                          "' has no time steps");
    }
    std::vector<double> data(seq.timesteps.size() * width_);
    for (std::size_t t = 0; t < seq.timesteps.size(); ++t) {
      encode_step(seq.timesteps[t], data.data() + t * width_);
    }
    return Tensor({seq.timesteps.size(), width_}, std::move(data));
  }

  // [B x T x width()] for equal-length sequences.
  Tensor encode_batch(const std::vector<const PatientSequence*>& batch) const {
    if (batch.empty()) throw ContractError("encode_batch: empty batch");
    const std::size_t steps = batch.front()->timesteps.size();
    std::vector<double> data(batch.size() * steps * width_);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (batch[b]->timesteps.size() != steps) {
        throw DimensionError("encode_batch: sequences differ in length");
      }
      for (std::size_t t = 0; t < steps; ++t) {
        encode_step(batch[b]->timesteps[t],
                    data.data() + (b * steps + t) * width_);
      }
    }
    return Tensor({batch.size(), steps, width_}, std::move(data));
  }

  // Inverse of encode for model-input features; others stay Missing.
  PatientSequence decode(const Tensor& encoded, std::string subject_id = {}) const {
    if (encoded.rank() != 2 || encoded.shape()[1] != width_) {
      throw DimensionError("decode: expected [T x " + std::to_string(width_) +
                           "], got " + shape_str(encoded.shape()));
    }
    PatientSequence seq;
    seq.subject_id = std::move(subject_id);
    const auto& v = encoded.values();
    for (std::size_t t = 0; t < encoded.shape()[0]; ++t) {
      FeatureVector fv =
          empty_feature_vector(*schema_, static_cast<std::int64_t>(t));
      const double* row = v.data() + t * width_;
      for (const auto& b : blocks_) {
        if ((*schema_)[b.feature].categorical()) {
          const auto best = static_cast<std::size_t>(
              std::max_element(row + b.offset, row + b.offset + b.width) -
              (row + b.offset));
          const auto& vocab = stats_->features[b.feature].vocabulary;
          fv.cells[b.feature] =
              best < vocab.size() ? vocab[best] : std::string(kUnknownCategory);
        } else {
          fv.cells[b.feature] = decode_value(b.feature, row[b.offset]);
        }
      }
      seq.timesteps.push_back(std::move(fv));
    }
    return seq;
  }

 private:
  const NormalizationStats* stats_;
  const Schema* schema_;
  std::vector<ColumnBlock> blocks_;
  std::size_t width_ = 0;
};

inline Tensor encode_features(const PatientSequence& seq,
                              const NormalizationStats& stats) {
  return FeatureEncoder(stats).encode(seq);
}

// ---------------------------------------------------------------------------
// Domain validation

// Every present value inside its schema domain; categorical values are free
// text (unknown ones encode to the unknown slot). Returns one message per
// violation, empty when valid.
inline std::vector<std::string> domain_violations(
    const PatientSequence& seq, const Schema& schema = Schema::sleep_health()) {
  std::vector<std::string> problems;
  for (const auto& fv : seq.timesteps) {
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const auto& spec = schema[f];
      if (fv.missing(f) || spec.categorical()) continue;
      const double v = fv.number(f);
      // Sleep duration may arrive in minutes before unit conversion.
      const double hi = f == feature::kSleepDuration ? 24.0 * kMinutesPerHour
                                                     : spec.max;
      if (!(v >= spec.min && v <= hi)) {
        problems.push_back(spec.name + " = " + format_number(v) +
                           " at timestep " + std::to_string(fv.timestep) +
                           " outside [" + format_number(spec.min) + ", " +
                           format_number(hi) + "]");
      }
    }
  }
  return problems;
}

// ---------------------------------------------------------------------------
// Synthetic cohort

struct SynthOptions {
  double label_noise = 0.05;
  // Fraction of subjects drawn from the high-strain component.
  double strained_fraction = 0.2;
  // Chance that a strained subject's final day is a rested one. Without it
  // the final day is redundant with the rest of the week and a model cannot
  // tell which day the label reads.
  double recovery_probability = 0.1;
};

// Subject-level generator. Two latent groups (rested 80% / strained 20%) set each
// subject's typical stress, sleep quality and heart rate; daily values
// scatter around those. Sleep duration, activity and blood pressure do not
// depend on the group. The label follows the rule
//   disorder iff quality_of_sleep <= 5 and stress_level >= 7 and
//   heart_rate >= 75
// evaluated on the final day (heart rate is the subject average), then
// flipped with probability `label_noise`. The disorder subtype is Sleep
// Apnea for Overweight/Obese subjects and Insomnia otherwise (about half
// each). Marginals: sleep 5.8-8.5 h (mean ~7.13), quality 4-9 (mean ~7.31),
// activity 30-90 min (mean ~59.17), stress 3-8 (mean ~5.39).
inline std::vector<PatientSequence> synth_generate(
    std::size_t n_subjects, std::size_t timesteps, std::uint64_t seed,
    const SynthOptions& options = {}) {
  using namespace feature;
  if (n_subjects < 1) throw ContractError("synth_generate: n_subjects must be >= 1");
  if (timesteps < 1) throw ContractError("synth_generate: timesteps must be >= 1");
  const Schema& schema = Schema::sleep_health();
  Rng rng(seed);
  auto clip = [](double v, double lo, double hi) { return std::clamp(v, lo, hi); };
  auto round_clip = [](double v, double lo, double hi) {
    return std::clamp(std::round(v), lo, hi);
  };
  const std::vector<std::string> occupations = schema[kOccupation].categories;
  const std::vector<double> occupation_weights = {0.10, 0.18, 0.17, 0.12,
                                                  0.19, 0.10, 0.14};
  const int digits = static_cast<int>(std::to_string(n_subjects).size());

  std::vector<PatientSequence> out;
  out.reserve(n_subjects);
  for (std::size_t s = 0; s < n_subjects; ++s) {
    std::string id = std::to_string(s + 1);
    id = "S" + std::string(std::max(0, digits - static_cast<int>(id.size())), '0') + id;

    const bool strained = rng.bernoulli(options.strained_fraction);
    const double age = std::round(rng.uniform(27.0, 59.0));
    const std::string gender = rng.bernoulli(0.5) ? "Male" : "Female";
    const std::string occupation = occupations[rng.categorical(occupation_weights)];
    const double socioeconomic = static_cast<double>(rng.integer(1, 5));
    const double u_bmi = rng.uniform(0.0, 1.0);
    const std::string bmi =
        u_bmi < 0.5 ? "Normal" : (u_bmi < 0.85 ? "Overweight" : "Obese");

    const double stress_mu =
        strained ? rng.normal(7.6, 0.3) : rng.normal(4.84, 0.7);
    const double quality_mu =
        strained ? rng.normal(4.7, 0.3) : rng.normal(7.96, 0.6);
    const double rested_stress = rng.normal(4.84, 0.7);
    const double rested_quality = rng.normal(7.96, 0.6);
    const bool recovers = strained && rng.bernoulli(options.recovery_probability);
    const double hr_mu = strained ? rng.normal(80.0, 2.5) : rng.normal(69.0, 3.0);
    const double activity_mu = rng.normal(59.17, 12.0);
    const double systolic_mu = rng.normal(124.0, 6.0);
    const double diastolic_mu = rng.normal(80.0, 4.0);

    PatientSequence seq{id, {}, std::nullopt};
    for (std::size_t t = 0; t < timesteps; ++t) {
      FeatureVector fv = empty_feature_vector(schema, static_cast<std::int64_t>(t));
      const bool rested_day = recovers && t + 1 == timesteps;
      const double quality = round_clip(
          (rested_day ? rested_quality : quality_mu) + rng.normal(0.0, 0.45), 4, 9);
      const double stress = round_clip(
          (rested_day ? rested_stress : stress_mu) + rng.normal(0.0, 0.45), 3, 8);
      const double sleep = clip(7.13 + rng.normal(0.0, 0.5), 5.8, 8.5);
      const double activity = round_clip(activity_mu + rng.normal(0.0, 8.0), 30, 90);
      fv.cells[kAge] = age;
      fv.cells[kGender] = gender;
      fv.cells[kOccupation] = occupation;
      fv.cells[kSocioeconomic] = socioeconomic;
      fv.cells[kSleepDuration] = std::round(sleep * 100.0) / 100.0;
      fv.cells[kQualityOfSleep] = quality;
      fv.cells[kActivityRawMinutes] = activity;
      fv.cells[kStressLevel] = stress;
      fv.cells[kBmiCategory] = bmi;
      fv.cells[kSystolicBp] = std::round(systolic_mu + rng.normal(0.0, 3.0));
      fv.cells[kDiastolicBp] = std::round(diastolic_mu + rng.normal(0.0, 2.0));
      fv.cells[kHeartRate] = std::round(hr_mu + rng.normal(0.0, 2.0));
      fv.cells[kDailySteps] = std::round(
          std::max(1000.0, 2500.0 + 70.0 * activity + rng.normal(0.0, 600.0)));
      seq.timesteps.push_back(std::move(fv));
    }

    double hr_mean = 0.0;
    for (const auto& fv : seq.timesteps) hr_mean += fv.number(kHeartRate);
    hr_mean /= static_cast<double>(timesteps);
    const FeatureVector& last = seq.timesteps.back();
    bool disorder = last.number(kQualityOfSleep) <= 5.0 &&
                    last.number(kStressLevel) >= 7.0 && hr_mean >= 75.0;
    if (rng.bernoulli(options.label_noise)) disorder = !disorder;
    seq.label = !disorder ? Label::kNone
                          : (bmi == "Normal" ? Label::kInsomnia : Label::kSleepApnea);
    out.push_back(std::move(seq));
  }
  return out;
}

// The generator's labelling rule on a preprocessed (or generated) sequence,
// before noise: final-day quality and stress, subject-average heart rate.
inline bool synthetic_rule(const PatientSequence& seq) {
  using namespace feature;
  double hr = 0.0;
  for (const auto& fv : seq.timesteps) hr += fv.number(kHeartRate);
  hr /= static_cast<double>(seq.timesteps.size());
  const FeatureVector& last = seq.timesteps.back();
  return last.number(kQualityOfSleep) <= 5.0 && last.number(kStressLevel) >= 7.0 &&
         hr >= 75.0;
}

}  // namespace sleepx

#endif  // SLEEPX_DATAIO_HPP_
