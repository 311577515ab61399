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

// Plot data for the three result views: predictions over the rule features,
// SHAP matrices, and attention/counterfactual traces. Each view has a CSV
// table (the data of record) and a small static SVG rendering of it.

#ifndef SLEEPX_PLOTS_HPP_
#define SLEEPX_PLOTS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sleepx/checkpoint.hpp"
#include "sleepx/dataio.hpp"
#include "sleepx/error.hpp"
#include "sleepx/explain.hpp"
#include "sleepx/schema.hpp"

namespace sleepx {

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string header(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string text(double x, double y, const std::string& s, const std::string& anchor = "start") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\">" +
         escape(s) + "</text>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, const std::string& stroke = "#444") {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
         num(y2) + "\" stroke=\"" + stroke + "\"/>\n";
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill) {
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
         num(h) + "\" fill=\"" + fill + "\"/>\n";
}

// Blue (negative) through white to red (positive); `t` in [-1, 1].
inline std::string diverging(double t) {
  t = std::clamp(t, -1.0, 1.0);
  const auto mix = [&](int a, int b) {
    return static_cast<int>(std::lround(255 + (b - 255) * std::abs(t)));
  };
  const int r = t < 0 ? mix(255, 33) : 255, g = t < 0 ? mix(255, 102) : mix(255, 60),
            b = t < 0 ? 255 : mix(255, 45);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", std::clamp(r, 0, 255), std::clamp(g, 0, 255),
                std::clamp(b, 0, 255));
  return buf;
}

}  // namespace svg

// ---------------------------------------------------------------------------
// Predictions over quality of sleep, stress and heart rate

struct ScatterRecord {
  std::string subject_id;
  double quality_of_sleep = 0.0;  // final step
  double stress_level = 0.0;      // final step
  double heart_rate = 0.0;        // subject mean
  bool predicted_disorder = false;
  std::string predicted_label;
  std::optional<Label> true_label;
  double p_disorder = 0.0;
};

// One record per input subject, in input order.
inline std::vector<ScatterRecord> prediction_scatter(const ModelCheckpoint& ckpt,
                                                     const std::vector<PatientSequence>& raw) {
  if (raw.empty()) throw SizeError("prediction scatter: no subjects");
  const FeatureEncoder encoder = ckpt.encoder();
  const auto clean = preprocess(raw, ckpt.stats);
  std::vector<ScatterRecord> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const FeatureVector& last = clean[i].timesteps.back();
    const Prediction p = classifier_predict(ckpt, encoder.encode(clean[i]));
    out.push_back({raw[i].subject_id, last.number(feature::kQualityOfSleep),
                   last.number(feature::kStressLevel), last.number(feature::kHeartRate),
                   p.predicted != 0, class_names()[p.predicted], raw[i].label, 1.0 - p.probs[0]});
  }
  return out;
}

inline void write_scatter_csv(std::ostream& out, const std::vector<ScatterRecord>& records) {
  out << "subject_id,quality_of_sleep,stress_level,heart_rate,predicted_disorder,predicted_label,"
         "true_label,p_disorder\n";
  for (const auto& r : records) {
    out << detail::csv_escape(r.subject_id) << ',' << format_number(r.quality_of_sleep) << ','
        << format_number(r.stress_level) << ',' << format_number(r.heart_rate) << ','
        << (r.predicted_disorder ? 1 : 0) << ',' << detail::csv_escape(r.predicted_label) << ','
        << (r.true_label ? detail::csv_escape(label_name(*r.true_label)) : "") << ','
        << format_number(r.p_disorder) << '\n';
  }
}

// Quality on x, stress on y, marker area from heart rate, colour from the
// predicted class. A ring marks a prediction that disagrees with the label.
inline std::string scatter_svg(const std::vector<ScatterRecord>& records) {
  const double w = 480, h = 380, left = 50, right = 130, top = 30, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double q) { return left + (q - 0.5) / 10.0 * pw; };
  auto py = [&](double s) { return top + ph - (s - 0.5) / 10.0 * ph; };
  std::string s = svg::header(w, h);
  s += svg::text(left, 18, "Predictions by sleep quality, stress and heart rate");
  s += svg::line(left, top + ph, left + pw, top + ph) + svg::line(left, top, left, top + ph);
  for (int v = 1; v <= 10; ++v) {
    s += svg::text(px(v), top + ph + 14, std::to_string(v), "middle");
    s += svg::text(left - 6, py(v) + 4, std::to_string(v), "end");
  }
  s += svg::text(left + pw / 2, h - 12, "quality_of_sleep (final day)", "middle");
  s += "<text x=\"14\" y=\"" + svg::num(top + ph / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " + svg::num(top + ph / 2) +
       ")\">stress_level (final day)</text>\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    // Spread points that share a grid cell.
    const double dx = static_cast<double>(static_cast<int>((i * 7) % 9) - 4) * 2.0;
    const double dy = static_cast<double>(static_cast<int>((i * 5) % 9) - 4) * 2.0;
    const double radius = std::clamp(2.0 + (r.heart_rate - 55.0) / 8.0, 2.0, 8.0);
    const bool wrong = r.true_label && is_disorder(*r.true_label) != r.predicted_disorder;
    s += "<circle cx=\"" + svg::num(px(r.quality_of_sleep) + dx) + "\" cy=\"" +
         svg::num(py(r.stress_level) + dy) + "\" r=\"" + svg::num(radius) + "\" fill=\"" +
         (r.predicted_disorder ? "#d62728" : "#1f77b4") + "\" fill-opacity=\"0.6\"" +
         (wrong ? " stroke=\"black\" stroke-width=\"1.5\"" : "") + "/>\n";
  }
  const double lx = left + pw + 14;
  s += "<circle cx=\"" + svg::num(lx) + "\" cy=\"" + svg::num(top + 10) +
       "\" r=\"5\" fill=\"#d62728\" fill-opacity=\"0.6\"/>\n" +
       svg::text(lx + 10, top + 14, "disorder");
  s += "<circle cx=\"" + svg::num(lx) + "\" cy=\"" + svg::num(top + 28) +
       "\" r=\"5\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n" +
       svg::text(lx + 10, top + 32, "no disorder");
  s += "<circle cx=\"" + svg::num(lx) + "\" cy=\"" + svg::num(top + 46) +
       "\" r=\"5\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n" +
       svg::text(lx + 10, top + 50, "misclassified");
  s += svg::text(lx - 5, top + 72, "size: heart rate");
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------
// SHAP matrices

// Rows are time steps (or a single "all" row), columns are features.
inline void write_shap_csv(std::ostream& out, const ShapReport& rep) {
  out << "timestep";
  for (const auto& name : rep.feature_names) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < rep.per_feature_per_timestep.size(); ++r) {
    out << (rep.timestep_labels.empty() ? std::string("all")
                                        : std::to_string(rep.timestep_labels[r]));
    for (double v : rep.per_feature_per_timestep[r]) out << ',' << format_number(v);
    out << '\n';
  }
}

// Heat map with features down the side and time steps across.
inline std::string shap_svg(const ShapReport& rep) {
  const std::size_t rows = rep.feature_names.size(), cols = rep.per_feature_per_timestep.size();
  const double cell_w = 44, cell_h = 18, left = 130, top = 40;
  const double w = left + cell_w * static_cast<double>(cols) + 20;
  const double h = top + cell_h * static_cast<double>(rows) + 50;
  double scale = 0.0;
  for (const auto& row : rep.per_feature_per_timestep) {
    for (double v : row) scale = std::max(scale, std::abs(v));
  }
  if (scale == 0.0) scale = 1.0;
  std::string s = svg::header(w, h);
  s += svg::text(10, 18, "SHAP values for " + target_name(rep.target_class) + " (" + rep.method +
                             "), base " + svg::num(rep.base_value) + ", output " +
                             svg::num(rep.prediction));
  for (std::size_t c = 0; c < cols; ++c) {
    const std::string label =
        rep.timestep_labels.empty() ? "all" : "t" + std::to_string(rep.timestep_labels[c]);
    s += svg::text(left + cell_w * (static_cast<double>(c) + 0.5), top - 6, label, "middle");
  }
  for (std::size_t f = 0; f < rows; ++f) {
    const double y = top + cell_h * static_cast<double>(f);
    s += svg::text(left - 6, y + cell_h - 5, rep.feature_names[f], "end");
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = rep.per_feature_per_timestep[c][f];
      s += svg::rect(left + cell_w * static_cast<double>(c), y, cell_w - 1, cell_h - 1,
                     svg::diverging(v / scale));
    }
  }
  s += svg::text(left, h - 20, "blue lowers, red raises the output; |max| = " + svg::num(scale));
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------
// Attention and counterfactual traces

struct CounterfactualTrace {
  std::vector<std::int64_t> timesteps;
  std::optional<std::vector<double>> attention_original;  // absent for the TCN
  std::optional<std::vector<double>> attention_modified;
  std::vector<std::string> changed;  // feature names, schema order
  // [feature][step] values before and after
  std::vector<std::vector<Cell>> before;
  std::vector<std::vector<Cell>> after;
};

inline CounterfactualTrace counterfactual_trace(const ModelCheckpoint& ckpt, const Counterfactual& cf) {
  const Schema& schema = Schema::sleep_health();
  CounterfactualTrace tr;
  for (const auto& fv : cf.original.timesteps) tr.timesteps.push_back(fv.timestep);
  if (ckpt.arch() != Arch::kTcn) {
    const FeatureEncoder encoder = ckpt.encoder();
    tr.attention_original = attention_trace(ckpt, encoder.encode(cf.original)).scores;
    tr.attention_modified = attention_trace(ckpt, encoder.encode(cf.modified)).scores;
  }
  std::set<std::string> names;
  for (const auto& c : cf.changed_features) names.insert(c.feature);
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (!names.count(schema[f].name)) continue;
    tr.changed.push_back(schema[f].name);
    std::vector<Cell> b, a;
    for (std::size_t t = 0; t < cf.original.length(); ++t) {
      b.push_back(cf.original.timesteps[t].cells[f]);
      a.push_back(cf.modified.timesteps[t].cells[f]);
    }
    tr.before.push_back(std::move(b));
    tr.after.push_back(std::move(a));
  }
  return tr;
}

inline std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return "";
}

inline void write_trace_csv(std::ostream& out, const CounterfactualTrace& tr) {
  out << "timestep,attention_original,attention_modified";
  for (const auto& name : tr.changed) out << ',' << name << "_original," << name << "_modified";
  out << '\n';
  for (std::size_t t = 0; t < tr.timesteps.size(); ++t) {
    out << tr.timesteps[t] << ','
        << (tr.attention_original ? format_number((*tr.attention_original)[t]) : "") << ','
        << (tr.attention_modified ? format_number((*tr.attention_modified)[t]) : "");
    for (std::size_t k = 0; k < tr.changed.size(); ++k) {
      out << ',' << detail::csv_escape(cell_text(tr.before[k][t])) << ','
          << detail::csv_escape(cell_text(tr.after[k][t]));
    }
    out << '\n';
  }
}

// Paired attention bars per step (original grey, modified orange) above a
// table of the changed values.
inline std::string trace_svg(const CounterfactualTrace& tr, const Counterfactual& cf) {
  const std::size_t steps = tr.timesteps.size();
  const double slot = 48, left = 130, top = 40, bar_h = 120;
  const double w = left + slot * static_cast<double>(steps) + 20;
  const double h = top + bar_h + 40 + 16 * static_cast<double>(tr.changed.size()) + 40;
  std::string s = svg::header(w, h);
  s += svg::text(10, 18, class_names()[cf.original_prediction.class_index] + " -> " +
                             class_names()[cf.new_prediction.class_index] +
                             (cf.converged ? "" : " (not converged)") + ", distance " +
                             svg::num(cf.distance));
  const double base = top + bar_h;
  s += svg::line(left, base, left + slot * static_cast<double>(steps), base);
  if (tr.attention_original) {
    double peak = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      peak = std::max({peak, (*tr.attention_original)[t], (*tr.attention_modified)[t]});
    }
    if (peak == 0.0) peak = 1.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const double x = left + slot * static_cast<double>(t);
      const double a = (*tr.attention_original)[t] / peak * bar_h;
      const double b = (*tr.attention_modified)[t] / peak * bar_h;
      s += svg::rect(x + 6, base - a, 16, a, "#9e9e9e");
      s += svg::rect(x + 24, base - b, 16, b, "#ff7f0e");
    }
    s += svg::text(left - 6, top + 10, "attention", "end");
  } else {
    s += svg::text(left, top + bar_h / 2, "no attention head (tcn)");
  }
  for (std::size_t t = 0; t < steps; ++t) {
    s += svg::text(left + slot * (static_cast<double>(t) + 0.5), base + 14,
                   "t" + std::to_string(tr.timesteps[t]), "middle");
  }
  for (std::size_t k = 0; k < tr.changed.size(); ++k) {
    const double y = base + 40 + 16 * static_cast<double>(k);
    s += svg::text(left - 6, y, tr.changed[k], "end");
    for (std::size_t t = 0; t < steps; ++t) {
      const std::string b = cell_text(tr.before[k][t]), a = cell_text(tr.after[k][t]);
      s += svg::text(left + slot * (static_cast<double>(t) + 0.5), y, b == a ? b : b + ">" + a,
                     "middle");
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace sleepx

#endif  // SLEEPX_PLOTS_HPP_
