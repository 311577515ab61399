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

// Explanations for trained checkpoints: Shapley attributions per feature and
// per (time step, feature), attention traces, and counterfactual search.

#ifndef SLEEPX_EXPLAIN_HPP_
#define SLEEPX_EXPLAIN_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sleepx/checkpoint.hpp"
#include "sleepx/dataio.hpp"
#include "sleepx/error.hpp"
#include "sleepx/json_io.hpp"
#include "sleepx/models.hpp"
#include "sleepx/ops.hpp"
#include "sleepx/random.hpp"
#include "sleepx/schema.hpp"
#include "sleepx/shapley.hpp"

namespace sleepx {

// Target index meaning "any disorder": the output is 1 - P(None).
inline constexpr std::size_t kAnyDisorder = kNumClasses;

inline std::string target_name(std::size_t target) {
  if (target == kAnyDisorder) return "disorder";
  if (target >= class_names().size()) throw IndexError("unknown target class " + std::to_string(target));
  return class_names()[target];
}

inline std::size_t parse_target(const std::string& text) {
  if (text == "disorder") return kAnyDisorder;
  return static_cast<std::size_t>(parse_label(text));
}

// Batched target output of a classifier, evaluated without a graph.
inline BatchModel target_output(const SequenceClassifier& model, std::size_t target) {
  if (target > kAnyDisorder || (target != kAnyDisorder && target >= model.hyper.n_classes)) {
    throw IndexError("target class " + std::to_string(target) + " is out of range");
  }
  return [&model, target](const Tensor& batch) {
    const std::vector<double> probs = predict_batch(model, batch).values();
    const std::size_t classes = model.hyper.n_classes;
    std::vector<double> out(probs.size() / classes);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = target == kAnyDisorder ? 1.0 - probs[i * classes]
                                      : probs[i * classes + target];
    }
    return out;
  };
}

// Model-input features as attribution blocks over the encoded columns.
inline std::vector<FeatureBlock> feature_blocks(const FeatureEncoder& encoder,
                                                const Schema& schema = Schema::sleep_health()) {
  std::vector<FeatureBlock> out;
  for (const ColumnBlock& b : encoder.blocks()) {
    out.push_back({schema[b.feature].name, b.offset, b.offset + b.width});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shapley reports

struct ShapReport {
  std::vector<std::string> feature_names;
  // One row per time step for time-step summaries; a single row when each
  // feature is attributed over the whole sequence (timestep_labels empty).
  std::vector<std::vector<double>> per_feature_per_timestep;
  std::vector<std::int64_t> timestep_labels;
  std::vector<std::vector<double>> standard_errors;  // kernel only, same layout
  double base_value = 0.0;
  double prediction = 0.0;  // model output for the target at the instance
  std::size_t target_class = kAnyDisorder;
  std::string method;       // "exact" or "kernel"
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::size_t background_size = 0;
  std::size_t evaluations = 0;

  std::vector<double> feature_totals() const {
    std::vector<double> out(feature_names.size(), 0.0);
    for (const auto& row : per_feature_per_timestep) {
      for (std::size_t f = 0; f < out.size(); ++f) out[f] += row[f];
    }
    return out;
  }
  double efficiency_residual() const {
    double total = base_value;
    for (double v : feature_totals()) total += v;
    return std::abs(total - prediction);
  }
};

namespace detail {

inline ShapReport make_report(const std::vector<FeatureBlock>& blocks, const ShapleyResult& r,
                              std::size_t rows, std::size_t target, const CoalitionEvaluator& eval) {
  ShapReport rep;
  const std::size_t f = blocks.size();
  for (const auto& b : blocks) rep.feature_names.push_back(b.name);
  rep.per_feature_per_timestep.assign(rows, std::vector<double>(f, 0.0));
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    rep.per_feature_per_timestep[i / f][i % f] = r.values[i];
  }
  if (!r.standard_errors.empty()) {
    rep.standard_errors.assign(rows, std::vector<double>(f, 0.0));
    for (std::size_t i = 0; i < r.standard_errors.size(); ++i) {
      rep.standard_errors[i / f][i % f] = r.standard_errors[i];
    }
  }
  rep.base_value = r.base_value;
  rep.prediction = r.full_value;
  rep.target_class = target;
  rep.background_size = eval.background_size();
  rep.evaluations = r.evaluations;
  return rep;
}

inline void label_rows(ShapReport& rep, std::size_t steps) {
  for (std::size_t t = 0; t < steps; ++t) rep.timestep_labels.push_back(static_cast<std::int64_t>(t));
}

}  // namespace detail

// Whole-sequence attribution per block by full enumeration (at most 14 blocks).
inline ShapReport shap_exact(const BatchModel& model, const Tensor& instance,
                             const std::vector<Tensor>& background,
                             const std::vector<FeatureBlock>& blocks, std::size_t target) {
  detail::require_exact_budget(blocks.size());
  CoalitionEvaluator eval(model, instance, background, block_players(instance.shape().at(0), blocks));
  ShapReport rep = detail::make_report(blocks, exact_shapley(eval), 1, target, eval);
  rep.method = "exact";
  return rep;
}

inline ShapReport shap_kernel(const BatchModel& model, const Tensor& instance,
                              const std::vector<Tensor>& background,
                              const std::vector<FeatureBlock>& blocks, std::size_t target,
                              std::size_t n_samples, std::uint64_t seed) {
  CoalitionEvaluator eval(model, instance, background, block_players(instance.shape().at(0), blocks));
  ShapReport rep =
      detail::make_report(blocks, kernel_shapley(eval, n_samples, seed), 1, target, eval);
  rep.method = "kernel";
  rep.n_samples = n_samples;
  rep.seed = seed;
  return rep;
}

// (time step, block) players. Exact Owen values with blocks as unions when
// T * blocks fits the enumeration budget, so each column sums to the
// whole-sequence Shapley value of that block; kernel estimation otherwise.
inline ShapReport shap_timestep_summary(const BatchModel& model, const Tensor& instance,
                                        const std::vector<Tensor>& background,
                                        const std::vector<FeatureBlock>& blocks,
                                        std::size_t target, std::size_t n_samples,
                                        std::uint64_t seed) {
  const std::size_t steps = instance.shape().at(0);
  CoalitionEvaluator eval(model, instance, background, cell_players(steps, blocks));
  ShapReport rep;
  if (eval.players() <= kMaxExactPlayers) {
    std::vector<std::size_t> group_of(eval.players());
    for (std::size_t i = 0; i < group_of.size(); ++i) group_of[i] = i % blocks.size();
    rep = detail::make_report(blocks, exact_owen(eval, group_of), steps, target, eval);
    rep.method = "exact";
  } else {
    rep = detail::make_report(blocks, kernel_shapley(eval, n_samples, seed), steps, target, eval);
    rep.method = "kernel";
    rep.n_samples = n_samples;
    rep.seed = seed;
  }
  detail::label_rows(rep, steps);
  return rep;
}

struct ShapOptions {
  std::size_t target_class = kAnyDisorder;
  std::size_t n_samples = 2048;
  std::uint64_t seed = 7;
  std::size_t background_size = 50;
};

// Preprocesses with the checkpoint's statistics and encodes up to `size`
// sequences drawn without replacement (seeded), keeping input order.
inline std::vector<Tensor> encode_background(const ModelCheckpoint& ckpt,
                                             const std::vector<PatientSequence>& raw,
                                             std::size_t size, std::uint64_t seed) {
  if (raw.empty() || size == 0) throw ContractError("shap: background must be non-empty");
  std::vector<std::size_t> pick(raw.size());
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  if (raw.size() > size) {
    Rng rng(seed);
    rng.shuffle(pick);
    pick.resize(size);
    std::sort(pick.begin(), pick.end());
  }
  std::vector<PatientSequence> chosen;
  for (std::size_t i : pick) chosen.push_back(raw[i]);
  const FeatureEncoder encoder = ckpt.encoder();
  std::vector<Tensor> out;
  for (const auto& seq : preprocess(chosen, ckpt.stats)) out.push_back(encoder.encode(seq));
  return out;
}

namespace detail {

inline Tensor encode_instance(const ModelCheckpoint& ckpt, const PatientSequence& raw) {
  return ckpt.encoder().encode(preprocess({raw}, ckpt.stats).front());
}

inline std::vector<std::int64_t> timestep_labels_of(const PatientSequence& raw) {
  std::vector<std::int64_t> out;
  for (const auto& fv : raw.timesteps) out.push_back(fv.timestep);
  return out;
}

}  // namespace detail

inline ShapReport shap_exact(const ModelCheckpoint& ckpt, const PatientSequence& raw,
                             const std::vector<PatientSequence>& background,
                             const ShapOptions& opt = {}) {
  return shap_exact(target_output(ckpt.model, opt.target_class), detail::encode_instance(ckpt, raw),
                    encode_background(ckpt, background, opt.background_size, opt.seed),
                    feature_blocks(ckpt.encoder()), opt.target_class);
}

inline ShapReport shap_kernel(const ModelCheckpoint& ckpt, const PatientSequence& raw,
                              const std::vector<PatientSequence>& background,
                              const ShapOptions& opt = {}) {
  return shap_kernel(target_output(ckpt.model, opt.target_class),
                     detail::encode_instance(ckpt, raw),
                     encode_background(ckpt, background, opt.background_size, opt.seed),
                     feature_blocks(ckpt.encoder()), opt.target_class, opt.n_samples, opt.seed);
}

inline ShapReport shap_timestep_summary(const ModelCheckpoint& ckpt, const PatientSequence& raw,
                                        const std::vector<PatientSequence>& background,
                                        const ShapOptions& opt = {}) {
  ShapReport rep = shap_timestep_summary(
      target_output(ckpt.model, opt.target_class), detail::encode_instance(ckpt, raw),
      encode_background(ckpt, background, opt.background_size, opt.seed),
      feature_blocks(ckpt.encoder()), opt.target_class, opt.n_samples, opt.seed);
  rep.timestep_labels = detail::timestep_labels_of(raw);
  return rep;
}

inline nlohmann::json shap_to_json(const ShapReport& rep) {
  nlohmann::json j = {
      {"kind", "shap"},
      {"method", rep.method},
      {"target_class", rep.target_class},
      {"target_name", target_name(rep.target_class)},
      {"base_value", rep.base_value},
      {"prediction", rep.prediction},
      {"background_size", rep.background_size},
      {"feature_names", rep.feature_names},
      {"feature_totals", rep.feature_totals()},
      {"per_feature_per_timestep", rep.per_feature_per_timestep},
      {"timestep_labels", rep.timestep_labels},
      {"efficiency_residual", rep.efficiency_residual()},
  };
  if (rep.method == "kernel") {
    j["n_samples"] = rep.n_samples;
    j["seed"] = rep.seed;
    j["standard_errors"] = rep.standard_errors;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Attention traces

struct AttentionTrace {
  std::vector<double> scores;  // [T], non-negative, sums to 1
  std::vector<std::int64_t> timestep_labels;
};

// Scores taken from the classifier's own forward pass on `encoded` [T x F].
inline AttentionTrace attention_trace(const ModelCheckpoint& ckpt, const Tensor& encoded) {
  if (ckpt.arch() == Arch::kTcn) {
    throw UnsupportedError("attention trace: the tcn architecture has no attention head");
  }
  const Prediction p = classifier_predict(ckpt, encoded);
  AttentionTrace trace;
  trace.scores = p.attention_scores->values();
  for (std::size_t t = 0; t < trace.scores.size(); ++t) {
    trace.timestep_labels.push_back(static_cast<std::int64_t>(t));
  }
  return trace;
}

inline AttentionTrace attention_trace(const ModelCheckpoint& ckpt, const PatientSequence& raw) {
  AttentionTrace trace = attention_trace(ckpt, detail::encode_instance(ckpt, raw));
  trace.timestep_labels = detail::timestep_labels_of(raw);
  return trace;
}

inline nlohmann::json attention_to_json(const AttentionTrace& trace) {
  return {{"kind", "attention"},
          {"scores", trace.scores},
          {"timestep_labels", trace.timestep_labels}};
}

// ---------------------------------------------------------------------------
// Predictions

// Prediction for a raw sequence; attention is null for the TCN.
inline nlohmann::json prediction_to_json(const Prediction& p,
                                         const std::vector<std::int64_t>& timestep_labels) {
  return {{"kind", "prediction"},
          {"probs", p.probs},
          {"class_names", class_names()},
          {"predicted_class", p.predicted},
          {"predicted_label", class_names()[p.predicted]},
          {"timestep_labels", timestep_labels},
          {"attention_scores", p.attention_scores ? nlohmann::json(p.attention_scores->values())
                                                  : nlohmann::json(nullptr)}};
}

inline nlohmann::json predict_to_json(const ModelCheckpoint& ckpt, const PatientSequence& raw) {
  return prediction_to_json(predict_sequence(ckpt, raw), detail::timestep_labels_of(raw));
}

// ---------------------------------------------------------------------------
// Counterfactual search

// Which recorded values a counterfactual may move. Subject-level features
// always change on every step.
enum class CounterfactualScope {
  kFinalStep,  // the last step's values
  kEveryStep,  // each step's value independently
  // One shift per feature added to every step (clamped to the domain): a
  // sustained change of level rather than a single different day.
  kSustainedShift,
};

inline std::string scope_name(CounterfactualScope scope) {
  switch (scope) {
    case CounterfactualScope::kFinalStep: return "final_step";
    case CounterfactualScope::kEveryStep: return "every_step";
    case CounterfactualScope::kSustainedShift: return "sustained_shift";
  }
  return "final_step";
}

inline CounterfactualScope parse_scope(const std::string& text) {
  for (auto s : {CounterfactualScope::kFinalStep, CounterfactualScope::kEveryStep,
                 CounterfactualScope::kSustainedShift}) {
    if (scope_name(s) == text) return s;
  }
  throw ContractError("unknown counterfactual scope '" + text +
                      "' (final_step|every_step|sustained_shift)");
}

struct CounterfactualConfig {
  double lambda_initial = 0.1;
  double lambda_growth = 2.0;
  std::size_t lambda_interval = 50;  // iterations between growth steps
  double lambda_cap = 100.0;
  std::size_t max_iters = 2000;
  double step_size = 0.05;   // gradient step, standardized units
  double max_move = 0.25;    // per-iteration move bound, standardized units
  // nullopt: every mutable model input. An explicit empty set is an error.
  std::optional<std::vector<std::string>> mutable_features;
  // Per-feature distance weights; unspecified features use 1/MAD (1/sd when
  // the MAD is zero). A changed category costs its weight (default 1).
  std::map<std::string, double> feature_weights;
  CounterfactualScope scope = CounterfactualScope::kFinalStep;
  // Exhaustive integer-grid scan when the gradient phase finds no flip and
  // the grid has at most this many points.
  std::size_t grid_fallback_limit = 4096;
  // Past this point the search stops and reports its best flip so far with
  // converged = false.
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct FeatureChange {
  std::string feature;
  std::optional<std::int64_t> timestep;  // nullopt: subject-level, every step
  Cell old_value;
  Cell new_value;
};

struct ClassProbability {
  std::size_t class_index = 0;
  double probability = 0.0;
};

struct Counterfactual {
  PatientSequence original;  // preprocessed, natural units
  PatientSequence modified;
  std::vector<FeatureChange> changed_features;
  ClassProbability original_prediction;
  ClassProbability new_prediction;
  std::size_t target_class = 0;
  CounterfactualScope scope = CounterfactualScope::kFinalStep;
  double distance = 0.0;  // weighted L1 over changed values
  bool converged = false;
  std::size_t iterations = 0;
  double final_lambda = 0.0;
  bool timed_out = false;
};

namespace detail {

inline bool past_deadline(const CounterfactualConfig& cfg) {
  return cfg.deadline && std::chrono::steady_clock::now() >= *cfg.deadline;
}

// A numeric decision variable. For a shift the value is the offset added to
// every step (original 0, mean 0) and `per_step` holds the recorded values.
struct NumericVar {
  std::size_t feature = 0;
  std::optional<std::size_t> step;  // nullopt: every step
  double original = 0.0, lo = 0.0, hi = 0.0, weight = 1.0, mean = 0.0, scale = 1.0;
  bool integer = false;
  bool shift = false;
  double domain_lo = 0.0, domain_hi = 0.0;
  double center = 0.0;  // encoder mean
  std::vector<double> per_step;

  double project(double u) const {
    u = std::clamp(u, lo, hi);
    return integer ? std::clamp(std::round(u), std::ceil(lo), std::floor(hi)) : u;
  }
  double value_at(double u, std::size_t t) const {
    return shift ? std::clamp(per_step[t] + u, domain_lo, domain_hi) : u;
  }
  // A shift costs its mean absolute change per step: one sustained change of
  // level is one intervention, and clamped steps count only what moved.
  double cost(double u) const {
    if (!shift) return weight * std::abs(u - original);
    double c = 0.0;
    for (std::size_t t = 0; t < per_step.size(); ++t) c += std::abs(value_at(u, t) - per_step[t]);
    return weight * c / static_cast<double>(per_step.size());
  }
};

struct CategoryVar {
  std::size_t feature = 0;
  std::optional<std::size_t> step;
  std::size_t original = 0;  // code in the vocabulary (or the unknown slot)
  std::size_t options = 0;   // vocabulary size; codes below it are candidates
  double weight = 1.0;
};

class CounterfactualProblem {
 public:
  CounterfactualProblem(const ModelCheckpoint& ckpt, const PatientSequence& clean,
                        std::size_t target, const CounterfactualConfig& cfg)
      : ckpt_(ckpt), encoder_(ckpt.encoder()), target_(target) {
    const Schema& schema = Schema::sleep_health();
    steps_ = clean.timesteps.size();
    base_ = encoder_.encode(clean).values();
    std::vector<std::size_t> chosen;
    if (cfg.mutable_features) {
      if (cfg.mutable_features->empty()) {
        throw ContractError("counterfactual: the mutable feature set is empty");
      }
      for (const auto& name : *cfg.mutable_features) {
        const std::size_t f = schema.index_of(name);
        if (schema[f].immutable) {
          throw ContractError("counterfactual: feature '" + name + "' is immutable");
        }
        if (!schema[f].model_input) {
          throw ContractError("counterfactual: feature '" + name + "' is not a model input");
        }
        if (std::find(chosen.begin(), chosen.end(), f) == chosen.end()) chosen.push_back(f);
      }
    } else {
      for (std::size_t f : schema.model_inputs()) {
        if (!schema[f].immutable) chosen.push_back(f);
      }
    }
    for (const auto& [name, w] : cfg.feature_weights) {
      schema.index_of(name);
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw ContractError("counterfactual: weight for '" + name + "' must be positive");
      }
    }
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t f : chosen) {
      const auto& spec = schema[f];
      const auto& fs = ckpt.stats.features[f];
      std::vector<std::optional<std::size_t>> steps;
      const bool shift = cfg.scope == CounterfactualScope::kSustainedShift &&
                         !spec.subject_level && !spec.categorical();
      if (spec.subject_level || shift) {
        steps.push_back(std::nullopt);
      } else if (cfg.scope == CounterfactualScope::kEveryStep) {
        for (std::size_t t = 0; t < steps_; ++t) steps.push_back(t);
      } else {
        steps.push_back(steps_ - 1);
      }
      const auto w = cfg.feature_weights.find(spec.name);
      for (const auto& step : steps) {
        const FeatureVector& fv = clean.timesteps[step.value_or(steps_ - 1)];
        if (spec.categorical()) {
          CategoryVar v{f, step, encoder_.category_code(f, fv.category(f)),
                        fs.vocabulary.size(), 1.0};
          if (w != cfg.feature_weights.end()) v.weight = w->second;
          cats_.push_back(v);
        } else {
          NumericVar v;
          v.feature = f;
          v.step = step;
          v.original = fv.number(f);
          v.domain_lo = f == feature::kPhysicalActivity ? kActivityLow : spec.min;
          v.domain_hi = f == feature::kPhysicalActivity ? kActivityHigh : spec.max;
          v.lo = v.domain_lo;
          v.hi = v.domain_hi;
          v.integer = spec.integer;
          v.mean = v.center = fs.mean;
          v.scale = fs.scale;
          v.weight = w != cfg.feature_weights.end() ? w->second
                     : fs.mad > 0.0                 ? 1.0 / fs.mad
                                                    : 1.0 / fs.scale;
          if (shift) {
            v.shift = true;
            for (const auto& day : clean.timesteps) v.per_step.push_back(day.number(f));
            const auto [mn, mx] = std::minmax_element(v.per_step.begin(), v.per_step.end());
            v.original = 0.0;
            v.mean = 0.0;
            v.lo = v.domain_lo - *mx;
            v.hi = v.domain_hi - *mn;
          }
          nums_.push_back(v);
        }
      }
    }
  }

  const std::vector<NumericVar>& numeric() const { return nums_; }
  const std::vector<CategoryVar>& categorical() const { return cats_; }
  std::size_t steps() const { return steps_; }

  std::vector<double> original_values() const {
    std::vector<double> u;
    for (const auto& v : nums_) u.push_back(v.original);
    return u;
  }
  std::vector<std::size_t> original_codes() const {
    std::vector<std::size_t> c;
    for (const auto& v : cats_) c.push_back(v.original);
    return c;
  }

  Tensor encode(const std::vector<double>& u, const std::vector<std::size_t>& codes) const {
    std::vector<double> x = base_;
    const std::size_t width = encoder_.width();
    auto for_steps = [&](const std::optional<std::size_t>& step, auto&& fn) {
      if (step) {
        fn(*step);
      } else {
        for (std::size_t t = 0; t < steps_; ++t) fn(t);
      }
    };
    for (std::size_t k = 0; k < nums_.size(); ++k) {
      const auto& v = nums_[k];
      const std::size_t col = encoder_.block_of(v.feature).offset;
      for_steps(v.step, [&](std::size_t t) {
        x[t * width + col] = (v.value_at(u[k], t) - v.center) /
                             v.scale;
      });
    }
    for (std::size_t k = 0; k < cats_.size(); ++k) {
      const auto& v = cats_[k];
      const ColumnBlock& b = encoder_.block_of(v.feature);
      for_steps(v.step, [&](std::size_t t) {
        std::fill_n(x.begin() + static_cast<std::ptrdiff_t>(t * width + b.offset), b.width, 0.0);
        x[t * width + b.offset + codes[k]] = 1.0;
      });
    }
    return Tensor({steps_, width}, std::move(x));
  }

  std::vector<double> probs(const std::vector<double>& u, const std::vector<std::size_t>& codes) const {
    return classifier_predict(ckpt_, encode(u, codes)).probs;
  }

  bool flips(const std::vector<double>& u, const std::vector<std::size_t>& codes) const {
    const auto p = probs(u, codes);
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == target_;
  }

  // Target probability and its gradient with respect to each numeric
  // variable in standardized units.
  std::pair<double, std::vector<double>> target_gradient(const std::vector<double>& u,
                                                          const std::vector<std::size_t>& codes) const {
    Tensor x = encode(u, codes);
    x = Tensor(x.shape(), x.values(), true);
    const ClassifierOutput out = classifier_forward(ckpt_.model, x);
    const Tensor p = pick(reshape(out.probs, {out.probs.numel()}), target_);
    backward(p);
    const std::vector<double> gx = x.grad();
    const std::size_t width = encoder_.width();
    std::vector<double> g(nums_.size(), 0.0);
    for (std::size_t k = 0; k < nums_.size(); ++k) {
      const std::size_t col = encoder_.block_of(nums_[k].feature).offset;
      const auto& v = nums_[k];
      if (v.step) {
        g[k] = gx[*v.step * width + col];
      } else {
        for (std::size_t t = 0; t < steps_; ++t) {
          // A clamped step does not move with the shift.
          if (v.shift && v.value_at(u[k], t) != v.per_step[t] + u[k]) continue;
          g[k] += gx[t * width + col];
        }
      }
    }
    return {p.item(), std::move(g)};
  }

  double distance(const std::vector<double>& u, const std::vector<std::size_t>& codes) const {
    double d = 0.0;
    for (std::size_t k = 0; k < nums_.size(); ++k) d += nums_[k].cost(u[k]);
    for (std::size_t k = 0; k < cats_.size(); ++k) {
      if (codes[k] != cats_[k].original) d += cats_[k].weight;
    }
    return d;
  }

 private:
  const ModelCheckpoint& ckpt_;
  FeatureEncoder encoder_;
  std::size_t target_;
  std::size_t steps_ = 0;
  std::vector<double> base_;
  std::vector<NumericVar> nums_;
  std::vector<CategoryVar> cats_;
};

struct SearchOutcome {
  bool found = false;
  std::vector<double> values;
  std::size_t iterations = 0;
  double lambda = 0.0;
};

// Proximal gradient descent on lambda (p_target - 1)^2 + sum_k w_k |u_k - u0_k|
// in standardized units; every iterate is projected onto the feature domains
// (integer grids included) before the flip test.
inline SearchOutcome gradient_search(const CounterfactualProblem& prob,
                                     const std::vector<std::size_t>& codes,
                                     const CounterfactualConfig& cfg) {
  const auto& vars = prob.numeric();
  SearchOutcome out;
  out.lambda = cfg.lambda_initial;
  std::vector<double> z(vars.size()), z0(vars.size()), lo(vars.size()), hi(vars.size());
  for (std::size_t k = 0; k < vars.size(); ++k) {
    z0[k] = z[k] = (vars[k].original - vars[k].mean) / vars[k].scale;
    lo[k] = (vars[k].lo - vars[k].mean) / vars[k].scale;
    hi[k] = (vars[k].hi - vars[k].mean) / vars[k].scale;
  }
  auto natural = [&](const std::vector<double>& zs) {
    std::vector<double> u(vars.size());
    for (std::size_t k = 0; k < vars.size(); ++k) {
      u[k] = vars[k].project(zs[k] * vars[k].scale + vars[k].mean);
    }
    return u;
  };
  for (std::size_t it = 1; it <= cfg.max_iters && !past_deadline(cfg); ++it) {
    if (it > 1 && (it - 1) % cfg.lambda_interval == 0) {
      out.lambda = std::min(cfg.lambda_cap, out.lambda * cfg.lambda_growth);
    }
    const auto [p, g] = prob.target_gradient(natural(z), codes);
    for (std::size_t k = 0; k < vars.size(); ++k) {
      double d = z[k] + cfg.step_size * out.lambda * 2.0 * (1.0 - p) * g[k] - z0[k];
      const double shrink = cfg.step_size * vars[k].weight * vars[k].scale;
      d = std::copysign(std::max(0.0, std::abs(d) - shrink), d);
      const double next = std::clamp(z0[k] + d, lo[k], hi[k]);
      z[k] += std::clamp(next - z[k], -cfg.max_move, cfg.max_move);
    }
    out.iterations = it;
    const std::vector<double> u = natural(z);
    if (prob.flips(u, codes)) {
      out.found = true;
      out.values = u;
      return out;
    }
  }
  return out;
}

// Pulls a flipping solution back toward the original: drops changes that are
// not needed, then moves each remaining value to the closest flipping value
// with the others held fixed (every closer grid point for integer features,
// bisection for continuous ones).
inline std::vector<double> refine(const CounterfactualProblem& prob,
                                  const std::vector<std::size_t>& codes, std::vector<double> u) {
  const auto& vars = prob.numeric();
  std::vector<std::size_t> order(vars.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return vars[a].cost(u[a]) > vars[b].cost(u[b]);
  });
  for (std::size_t k : order) {
    if (u[k] == vars[k].original) continue;
    std::vector<double> trial = u;
    trial[k] = vars[k].original;
    if (prob.flips(trial, codes)) u = std::move(trial);
  }
  for (std::size_t k : order) {
    const double orig = vars[k].original;
    if (u[k] == orig) continue;
    if (vars[k].integer) {
      const double reach = std::abs(u[k] - orig);
      bool done = false;
      for (double step = 1.0; step < reach && !done; step += 1.0) {
        for (double cand : {orig - step, orig + step}) {
          if (cand < vars[k].lo || cand > vars[k].hi || cand != vars[k].project(cand)) continue;
          std::vector<double> trial = u;
          trial[k] = cand;
          if (prob.flips(trial, codes)) {
            u = std::move(trial);
            done = true;
            break;
          }
        }
      }
    } else {
      double inside = u[k], outside = orig;
      for (int i = 0; i < 50 && std::abs(inside - outside) > 1e-9 * vars[k].scale; ++i) {
        std::vector<double> trial = u;
        trial[k] = 0.5 * (inside + outside);
        if (prob.flips(trial, codes)) {
          inside = trial[k];
        } else {
          outside = trial[k];
        }
      }
      u[k] = inside;
    }
  }
  return u;
}

// Minimum-distance flip over the full integer grid, if every numeric variable
// is integer-valued and the grid is small enough.
inline std::optional<std::vector<double>> grid_search(const CounterfactualProblem& prob,
                                                      const std::vector<std::size_t>& codes,
                                                      const CounterfactualConfig& cfg) {
  const auto& vars = prob.numeric();
  std::vector<std::vector<double>> axes;
  double points = 1.0;
  for (const auto& v : vars) {
    if (!v.integer) return std::nullopt;
    std::vector<double> axis;
    for (double x = std::ceil(v.lo); x <= std::floor(v.hi); x += 1.0) axis.push_back(x);
    points *= static_cast<double>(axis.size());
    axes.push_back(std::move(axis));
  }
  if (vars.empty() || points > static_cast<double>(cfg.grid_fallback_limit)) return std::nullopt;
  std::optional<std::vector<double>> best;
  double best_distance = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(vars.size(), 0);
  while (true) {
    std::vector<double> u(vars.size());
    for (std::size_t k = 0; k < vars.size(); ++k) u[k] = axes[k][idx[k]];
    const double d = prob.distance(u, codes);
    if (d < best_distance && prob.flips(u, codes)) {
      best = u;
      best_distance = d;
    }
    std::size_t k = 0;
    while (k < vars.size() && ++idx[k] == axes[k].size()) idx[k++] = 0;
    if (k == vars.size() || past_deadline(cfg)) break;
  }
  return best;
}

}  // namespace detail

// `raw` is preprocessed with the checkpoint's statistics first. Categorical
// variables are searched by trying every combination of known categories;
// numeric ones by the gradient search above.
inline Counterfactual counterfactual_search(const ModelCheckpoint& ckpt, const PatientSequence& raw,
                                            std::size_t target,
                                            const CounterfactualConfig& cfg = {}) {
  if (target >= ckpt.model.hyper.n_classes) {
    throw IndexError("counterfactual: target class " + std::to_string(target) + " is out of range");
  }
  if (cfg.max_iters == 0 || cfg.lambda_interval == 0 || !(cfg.step_size > 0.0)) {
    throw ContractError("counterfactual: max_iters, lambda_interval and step_size must be positive");
  }
  const Schema& schema = Schema::sleep_health();
  Counterfactual cf;
  cf.original = preprocess({raw}, ckpt.stats).front();
  cf.target_class = target;
  cf.scope = cfg.scope;
  const FeatureEncoder encoder = ckpt.encoder();
  const Prediction before = classifier_predict(ckpt, encoder.encode(cf.original));
  cf.original_prediction = {before.predicted, before.probs[before.predicted]};
  if (before.predicted == target) {
    throw ContractError("counterfactual: the instance is already predicted as " +
                        class_names()[target]);
  }
  const detail::CounterfactualProblem prob(ckpt, cf.original, target, cfg);
  const auto& nums = prob.numeric();
  const auto& cats = prob.categorical();

  // Category combinations in order of their own cost, original first.
  std::vector<std::vector<std::size_t>> combos{prob.original_codes()};
  for (std::size_t k = 0; k < cats.size(); ++k) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& c : combos) {
      for (std::size_t code = 0; code < cats[k].options; ++code) {
        if (code == cats[k].original) continue;
        auto d = c;
        d[k] = code;
        next.push_back(std::move(d));
      }
    }
    combos.insert(combos.end(), next.begin(), next.end());
  }
  const std::vector<double> u0 = prob.original_values();
  std::stable_sort(combos.begin(), combos.end(), [&](const auto& a, const auto& b) {
    return prob.distance(u0, a) < prob.distance(u0, b);
  });

  std::optional<std::pair<std::vector<double>, std::vector<std::size_t>>> best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& codes : combos) {
    if (prob.distance(u0, codes) >= best_distance) break;
    if (detail::past_deadline(cfg)) {
      cf.timed_out = true;
      break;
    }
    std::optional<std::vector<double>> found;
    if (prob.flips(u0, codes)) {
      found = u0;
    } else if (!nums.empty()) {
      const detail::SearchOutcome s = detail::gradient_search(prob, codes, cfg);
      cf.iterations += s.iterations;
      cf.final_lambda = std::max(cf.final_lambda, s.lambda);
      if (s.found) {
        found = detail::refine(prob, codes, s.values);
      } else {
        found = detail::grid_search(prob, codes, cfg);
      }
    }
    if (found && prob.distance(*found, codes) < best_distance) {
      best_distance = prob.distance(*found, codes);
      best = std::make_pair(*found, codes);
    }
    if (detail::past_deadline(cfg)) cf.timed_out = true;
  }

  cf.modified = cf.original;
  cf.distance = 0.0;
  if (best) {
    const auto& [u, codes] = *best;
    auto apply = [&](const std::optional<std::size_t>& step, std::size_t f, const Cell& value) {
      const std::size_t first = step.value_or(0), last = step ? *step + 1 : cf.modified.length();
      const Cell old = cf.original.timesteps[step.value_or(last - 1)].cells[f];
      if (old == value) return;
      for (std::size_t t = first; t < last; ++t) cf.modified.timesteps[t].cells[f] = value;
      std::optional<std::int64_t> label;
      if (step) label = cf.original.timesteps[*step].timestep;
      cf.changed_features.push_back({schema[f].name, label, old, value});
      // Preprocessing derives the activity level from raw minutes, so the
      // raw value follows to keep the record self-consistent.
      if (f == feature::kPhysicalActivity && ckpt.stats.activity_max > ckpt.stats.activity_min) {
        const double minutes = ckpt.stats.activity_min +
                               (std::get<double>(value) - kActivityLow) /
                                   (kActivityHigh - kActivityLow) *
                                   (ckpt.stats.activity_max - ckpt.stats.activity_min);
        for (std::size_t t = first; t < last; ++t) {
          const Cell prev = cf.modified.timesteps[t].cells[feature::kActivityRawMinutes];
          cf.modified.timesteps[t].cells[feature::kActivityRawMinutes] = minutes;
          cf.changed_features.push_back({schema[feature::kActivityRawMinutes].name,
                                         cf.original.timesteps[t].timestep, prev, minutes});
        }
      }
    };
    for (std::size_t k = 0; k < nums.size(); ++k) {
      if (nums[k].shift) {
        for (std::size_t t = 0; t < cf.modified.length(); ++t) {
          apply(t, nums[k].feature, nums[k].value_at(u[k], t));
        }
      } else {
        apply(nums[k].step, nums[k].feature, u[k]);
      }
    }
    for (std::size_t k = 0; k < cats.size(); ++k) {
      const auto& vocab = ckpt.stats.features[cats[k].feature].vocabulary;
      if (codes[k] != cats[k].original) apply(cats[k].step, cats[k].feature, vocab[codes[k]]);
    }
    cf.distance = best_distance;
  }
  const Prediction after = classifier_predict(ckpt, encoder.encode(cf.modified));
  cf.new_prediction = {after.predicted, after.probs[after.predicted]};
  cf.converged = best.has_value() && after.predicted == target && !cf.timed_out;
  return cf;
}

inline nlohmann::json counterfactual_to_json(const Counterfactual& cf) {
  nlohmann::json changes = nlohmann::json::array();
  for (const auto& c : cf.changed_features) {
    changes.push_back({{"feature", c.feature},
                       {"timestep", c.timestep ? nlohmann::json(*c.timestep) : nlohmann::json(nullptr)},
                       {"old", cell_to_json(c.old_value)},
                       {"new", cell_to_json(c.new_value)}});
  }
  auto prediction = [](const ClassProbability& p) {
    return nlohmann::json{{"class", p.class_index},
                          {"label", class_names()[p.class_index]},
                          {"probability", p.probability}};
  };
  return {{"kind", "counterfactual"},
          {"target_class", cf.target_class},
          {"target_name", class_names()[cf.target_class]},
          {"scope", scope_name(cf.scope)},
          {"converged", cf.converged},
          {"timed_out", cf.timed_out},
          {"distance", cf.distance},
          {"iterations", cf.iterations},
          {"final_lambda", cf.final_lambda},
          {"original_prediction", prediction(cf.original_prediction)},
          {"new_prediction", prediction(cf.new_prediction)},
          {"changed_features", std::move(changes)},
          {"original", sequence_to_json(cf.original)},
          {"modified", sequence_to_json(cf.modified)}};
}

}  // namespace sleepx

#endif  // SLEEPX_EXPLAIN_HPP_
