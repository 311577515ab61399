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

// Training: dataset splitting, augmentation, optimizers, the minibatch loop
// with early stopping, and evaluation metrics.

#ifndef SLEEPX_TRAINING_HPP_
#define SLEEPX_TRAINING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sleepx/checkpoint.hpp"
#include "sleepx/dataio.hpp"
#include "sleepx/error.hpp"
#include "sleepx/models.hpp"
#include "sleepx/ops.hpp"
#include "sleepx/random.hpp"

namespace sleepx {

// ---------------------------------------------------------------------------
// Splitting

struct DatasetSplit {
  std::vector<PatientSequence> train;
  std::vector<PatientSequence> test;
};

namespace detail {

inline std::size_t label_key(const PatientSequence& seq) {
  return seq.label ? static_cast<std::size_t>(*seq.label) : kNumClasses;
}

// Largest-remainder allocation of `n` across groups proportional to `sizes`,
// never exceeding a group's size.
inline std::vector<std::size_t> proportional_counts(
    const std::vector<std::size_t>& sizes, std::size_t n) {
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  std::vector<std::size_t> counts(sizes.size(), 0);
  if (total == 0 || n == 0) return counts;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double exact =
        static_cast<double>(n) * static_cast<double>(sizes[g]) / static_cast<double>(total);
    counts[g] = std::min(sizes[g], static_cast<std::size_t>(std::floor(exact)));
    assigned += counts[g];
    remainders.emplace_back(exact - std::floor(exact), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  while (assigned < n) {
    bool progressed = false;
    for (const auto& [rem, g] : remainders) {
      if (assigned == n) break;
      if (counts[g] < sizes[g]) {
        ++counts[g];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return counts;
}

// Stratified draw of `n` indices out of `pool`; returns (chosen, rest), each in
// ascending index order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_take(const std::vector<PatientSequence>& data,
                const std::vector<std::size_t>& pool, std::size_t n, Rng& rng) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i : pool) groups[label_key(data[i])].push_back(i);
  std::vector<std::size_t> sizes;
  for (auto& [key, members] : groups) {
    rng.shuffle(members);
    sizes.push_back(members.size());
  }
  const auto counts = proportional_counts(sizes, n);
  std::vector<std::size_t> chosen, rest;
  std::size_t g = 0;
  for (const auto& [key, members] : groups) {
    chosen.insert(chosen.end(), members.begin(), members.begin() + counts[g]);
    rest.insert(rest.end(), members.begin() + counts[g], members.end());
    ++g;
  }
  std::sort(chosen.begin(), chosen.end());
  std::sort(rest.begin(), rest.end());
  return {chosen, rest};
}

}  // namespace detail

// Disjoint train/test partitions, stratified by label.
inline DatasetSplit split_dataset(const std::vector<PatientSequence>& data,
                                  std::size_t train_n, std::size_t test_n,
                                  std::uint64_t seed) {
  if (train_n + test_n > data.size()) {
    throw SizeError("split needs " + std::to_string(train_n + test_n) +
                    " subjects, dataset has " + std::to_string(data.size()));
  }
  Rng rng(seed);
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto [test_idx, rest] = detail::stratified_take(data, all, test_n, rng);
  auto [train_idx, unused] = detail::stratified_take(data, rest, train_n, rng);
  DatasetSplit split;
  for (std::size_t i : train_idx) split.train.push_back(data[i]);
  for (std::size_t i : test_idx) split.test.push_back(data[i]);
  return split;
}

// ---------------------------------------------------------------------------
// Augmentation

enum class Oversample { kNone, kFactor, kBalance };

struct Augmentation {
  // Gaussian noise in standardized units on per-step continuous features;
  // 0 disables.
  double jitter_sigma = 0.05;
  Oversample oversample = Oversample::kFactor;
  // With kFactor: every class smaller than the largest grows to factor x its
  // size (fractional factors round down per class). kBalance grows each one
  // to the largest class size.
  double oversample_factor = 2.0;

  static Augmentation none() { return {0.0, Oversample::kNone, 1.0}; }
};

// Oversampling first, then jitter on every resulting sequence. `stats`
// supplies the per-feature scale for the noise.
inline std::vector<PatientSequence> augment(const std::vector<PatientSequence>& train,
                                            const Augmentation& cfg,
                                            const NormalizationStats& stats,
                                            std::uint64_t seed) {
  if (cfg.jitter_sigma < 0.0) throw ContractError("jitter sigma must be >= 0");
  if (cfg.oversample == Oversample::kFactor && cfg.oversample_factor < 1.0) {
    throw ContractError("oversample factor must be >= 1");
  }
  Rng rng(seed);
  std::vector<PatientSequence> out = train;
  if (cfg.oversample != Oversample::kNone && !train.empty()) {
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < train.size(); ++i) {
      groups[detail::label_key(train[i])].push_back(i);
    }
    std::size_t majority = 0;
    for (const auto& [key, members] : groups) majority = std::max(majority, members.size());
    for (const auto& [key, members] : groups) {
      if (members.size() == majority) continue;
      const std::size_t target =
          cfg.oversample == Oversample::kBalance
              ? majority
              : static_cast<std::size_t>(std::floor(
                    cfg.oversample_factor * static_cast<double>(members.size())));
      for (std::size_t k = members.size(); k < target; ++k) {
        PatientSequence copy = train[members[k % members.size()]];
        copy.subject_id += "#aug" + std::to_string(k / members.size());
        out.push_back(std::move(copy));
      }
    }
  }
  if (cfg.jitter_sigma > 0.0) {
    const Schema& schema = Schema::sleep_health();
    if (!stats.fitted()) throw ContractError("jitter needs fitted statistics");
    std::vector<std::size_t> noisy;
    for (std::size_t f : schema.model_inputs()) {
      if (schema[f].kind == FeatureKind::kContinuous && !schema[f].subject_level) {
        noisy.push_back(f);
      }
    }
    for (auto& seq : out) {
      for (auto& fv : seq.timesteps) {
        for (std::size_t f : noisy) {
          if (fv.missing(f)) continue;
          fv.cells[f] = fv.number(f) +
                        rng.normal(0.0, cfg.jitter_sigma) * stats.features[f].scale;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.0;  // SGD only
  // Decoupled decay, applied as w -= lr * weight_decay * w before the update.
  double weight_decay = 0.0;
};

class Optimizer {
 public:
  Optimizer(std::vector<Tensor> params, OptimizerConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    for (const Tensor& p : params_) {
      first_.emplace_back(p.numel(), 0.0);
      second_.emplace_back(p.numel(), 0.0);
    }
  }

  // `grads[k]` matches params[k] element for element.
  void step(const std::vector<std::vector<double>>& grads) {
    ++steps_;
    const double lr = cfg_.learning_rate;
    if (lr == 0.0) return;
    const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto data = params_[k].mutable_data();
      auto& m = first_[k];
      auto& v = second_[k];
      const auto& g = grads[k];
      if (cfg_.weight_decay > 0.0) {
        for (double& w : data) w -= lr * cfg_.weight_decay * w;
      }
      if (cfg_.kind == OptimizerKind::kSgd) {
        for (std::size_t i = 0; i < data.size(); ++i) {
          m[i] = cfg_.momentum * m[i] + g[i];
          data[i] -= lr * m[i];
        }
        continue;
      }
      for (std::size_t i = 0; i < data.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        data[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
      }
    }
  }

  std::size_t steps() const { return steps_; }

 private:
  std::vector<Tensor> params_;
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> first_, second_;
  std::size_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : confusion) {
      for (std::size_t v : row) n += v;
    }
    return n;
  }
  std::size_t correct() const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < confusion.size(); ++c) n += confusion[c][c];
    return n;
  }
  bool operator==(const Metrics&) const = default;
};

class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(std::size_t n_classes)
      : confusion_(n_classes, std::vector<std::size_t>(n_classes, 0)) {}

  // Adds a batch of logits [B x C] with targets.
  void add(const Tensor& logits, const std::vector<std::size_t>& targets) {
    const std::size_t classes = logits.shape()[1];
    const auto& v = logits.values();
    for (std::size_t b = 0; b < targets.size(); ++b) {
      const double* row = v.data() + b * classes;
      const double top = *std::max_element(row, row + classes);
      double z = 0.0;
      for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - top);
      loss_ += std::log(z) + top - row[targets[b]];
      const auto pred = static_cast<std::size_t>(
          std::max_element(row, row + classes) - row);
      ++confusion_[targets[b]][pred];
      ++count_;
    }
  }

  Metrics result() const {
    Metrics m;
    m.confusion = confusion_;
    if (count_ > 0) {
      m.mean_loss = loss_ / static_cast<double>(count_);
      m.accuracy = static_cast<double>(m.correct()) / static_cast<double>(count_);
    }
    return m;
  }

 private:
  std::vector<std::vector<std::size_t>> confusion_;
  double loss_ = 0.0;
  std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Encoded datasets and batching

struct EncodedSet {
  std::vector<Tensor> inputs;  // [T x F] each
  std::vector<std::size_t> labels;

  std::size_t size() const { return inputs.size(); }
};

inline EncodedSet encode_dataset(const std::vector<PatientSequence>& data,
                                 const FeatureEncoder& encoder) {
  EncodedSet out;
  for (const auto& seq : data) {
    if (!seq.label) {
      throw ContractError("subject '" + seq.subject_id + "' has no label");
    }
    out.inputs.push_back(encoder.encode(seq));
    out.labels.push_back(static_cast<std::size_t>(*seq.label));
  }
  return out;
}

namespace detail {

inline Tensor stack_inputs(const EncodedSet& set, const std::vector<std::size_t>& idx) {
  const Shape& one = set.inputs[idx.front()].shape();
  std::vector<double> data;
  data.reserve(idx.size() * shape_numel(one));
  for (std::size_t i : idx) {
    const auto& v = set.inputs[i].values();
    data.insert(data.end(), v.begin(), v.end());
  }
  return Tensor({idx.size(), one[0], one[1]}, std::move(data));
}

// Groups `order` into batches of equal sequence length, at most `batch_size`
// each, keeping the given order within a length.
inline std::vector<std::vector<std::size_t>> length_batches(
    const EncodedSet& set, const std::vector<std::size_t>& order,
    std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  std::map<std::size_t, std::vector<std::size_t>> open;
  for (std::size_t i : order) {
    auto& bucket = open[set.inputs[i].shape()[0]];
    bucket.push_back(i);
    if (bucket.size() == batch_size) {
      batches.push_back(std::move(bucket));
      bucket.clear();
    }
  }
  for (auto& [len, bucket] : open) {
    if (!bucket.empty()) batches.push_back(std::move(bucket));
  }
  return batches;
}

inline std::vector<std::size_t> pick(const std::vector<std::size_t>& v,
                                     const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

inline void copy_parameters(const SequenceClassifier& from, SequenceClassifier& to) {
  const auto src = from.parameters();
  auto dst = to.parameters();
  for (std::size_t k = 0; k < src.size(); ++k) {
    const auto& v = src[k].values();
    std::copy(v.begin(), v.end(), dst[k].mutable_data().begin());
  }
}

}  // namespace detail

inline Metrics evaluate_encoded(const SequenceClassifier& model, const EncodedSet& set,
                                std::size_t batch_size = 256) {
  if (set.size() == 0) throw ContractError("evaluate: empty dataset");
  NoGradGuard no_grad;
  std::vector<std::size_t> order(set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  MetricsAccumulator acc(model.hyper.n_classes);
  for (const auto& batch : detail::length_batches(set, order, batch_size)) {
    const Tensor logits =
        classifier_forward(model, detail::stack_inputs(set, batch)).logits;
    acc.add(logits, detail::pick(set.labels, batch));
  }
  return acc.result();
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
  Arch arch = Arch::kLstm;
  Hyperparameters hyper;  // input_size is filled from the encoder
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;
  std::size_t early_stop_patience = 20;
  std::uint64_t seed = 7;
  Augmentation augmentation;
  double validation_fraction = 0.1;
  // Data-parallel gradient shards per batch; 1 is the reproducible mode.
  std::size_t threads = 1;

  void validate() const {
    // A zero learning rate is accepted: it leaves the initial weights intact.
    if (!(optimizer.learning_rate >= 0.0)) {
      throw ContractError("learning_rate must be >= 0");
    }
    if (batch_size < 1) throw ContractError("batch_size must be >= 1");
    if (epochs < 1) throw ContractError("epochs must be >= 1");
    if (augmentation.jitter_sigma < 0.0) throw ContractError("jitter sigma must be >= 0");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
      throw ContractError("validation_fraction must be in [0, 1)");
    }
    if (threads < 1) throw ContractError("threads must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  Metrics train;
  Metrics validation;
};

struct FitResult {
  SequenceClassifier model;  // best-validation snapshot
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch training on already-encoded data.
inline FitResult fit_classifier(const SequenceClassifier& initial, const EncodedSet& train,
                                const EncodedSet& validation, const TrainConfig& cfg,
                                const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (train.size() == 0) throw ContractError("train: empty training set");
  SequenceClassifier model = initial.clone();
  std::vector<Tensor> params = model.parameters();
  Optimizer optimizer(params, cfg.optimizer);
  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<SequenceClassifier> replicas;
  for (std::size_t r = 1; r < cfg.threads; ++r) replicas.push_back(model.clone());

  FitResult result;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::vector<double>> grads(params.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    MetricsAccumulator train_acc(model.hyper.n_classes);
    for (const auto& batch : detail::length_batches(train, order, cfg.batch_size)) {
      const std::size_t shards = std::min(cfg.threads, batch.size());
      if (shards <= 1) {
        for (Tensor& p : params) p.zero_grad();
        const std::vector<std::size_t> targets = detail::pick(train.labels, batch);
        const Tensor logits =
            classifier_forward(model, detail::stack_inputs(train, batch)).logits;
        const Tensor loss = cross_entropy(logits, targets);
        if (!std::isfinite(loss.item())) {
          throw TrainingError(epoch, "loss is not finite");
        }
        backward(loss);
        train_acc.add(logits, targets);
        for (std::size_t k = 0; k < params.size(); ++k) grads[k] = params[k].grad();
      } else {
        // Shard s runs on replica s (shard 0 on the model itself); the
        // weighted gradients are summed in shard order.
        std::vector<std::vector<std::size_t>> parts(shards);
        for (std::size_t i = 0; i < batch.size(); ++i) {
          parts[i * shards / batch.size()].push_back(batch[i]);
        }
        for (auto& replica : replicas) detail::copy_parameters(model, replica);
        struct ShardOut {
          Tensor logits;
          std::vector<std::vector<double>> grads;
          double loss = 0.0;
        };
        auto run_shard = [&](std::size_t s) {
          SequenceClassifier& m = s == 0 ? model : replicas[s - 1];
          auto ps = m.parameters();
          for (Tensor& p : ps) p.zero_grad();
          const auto targets = detail::pick(train.labels, parts[s]);
          ShardOut out;
          out.logits = classifier_forward(m, detail::stack_inputs(train, parts[s])).logits;
          const Tensor loss =
              scale(cross_entropy(out.logits, targets),
                    static_cast<double>(parts[s].size()) / static_cast<double>(batch.size()));
          out.loss = loss.item();
          backward(loss);
          for (const Tensor& p : ps) out.grads.push_back(p.grad());
          return out;
        };
        std::vector<std::future<ShardOut>> futures;
        for (std::size_t s = 1; s < shards; ++s) {
          futures.push_back(std::async(std::launch::async, run_shard, s));
        }
        std::vector<ShardOut> outs;
        outs.push_back(run_shard(0));
        for (auto& f : futures) outs.push_back(f.get());
        for (std::size_t k = 0; k < params.size(); ++k) {
          grads[k].assign(params[k].numel(), 0.0);
        }
        for (std::size_t s = 0; s < shards; ++s) {
          if (!std::isfinite(outs[s].loss)) {
            throw TrainingError(epoch, "loss is not finite");
          }
          train_acc.add(outs[s].logits, detail::pick(train.labels, parts[s]));
          for (std::size_t k = 0; k < params.size(); ++k) {
            for (std::size_t i = 0; i < grads[k].size(); ++i) {
              grads[k][i] += outs[s].grads[k][i];
            }
          }
        }
      }
      optimizer.step(grads);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train = train_acc.result();
    record.validation =
        evaluate_encoded(model, validation.size() > 0 ? validation : train);
    if (!std::isfinite(record.validation.mean_loss)) {
      throw TrainingError(epoch, "validation loss is not finite");
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (record.validation.mean_loss < best_loss || result.best_epoch == 0) {
      best_loss = record.validation.mean_loss;
      result.best_epoch = epoch;
      result.model = model.clone();
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  return result;
}

struct TrainResult {
  ModelCheckpoint checkpoint;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::size_t train_size = 0;       // after augmentation
  std::size_t validation_size = 0;
  std::optional<Metrics> test;      // when the split has a test partition
};

// Full pipeline: carve validation, fit statistics on the remaining training
// subjects, augment, encode, fit, and evaluate on split.test.
inline TrainResult train(const DatasetSplit& split, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (split.train.empty()) throw ContractError("train: empty training split");
  Rng rng(cfg.seed);
  std::vector<std::size_t> all(split.train.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto n_val = static_cast<std::size_t>(
      std::floor(cfg.validation_fraction * static_cast<double>(split.train.size())));
  auto [val_idx, fit_idx] = detail::stratified_take(split.train, all, n_val, rng);
  std::vector<PatientSequence> fit_raw, val_raw;
  for (std::size_t i : fit_idx) fit_raw.push_back(split.train[i]);
  for (std::size_t i : val_idx) val_raw.push_back(split.train[i]);

  auto fitted = preprocess(fit_raw);
  const auto augmented =
      augment(fitted.sequences, cfg.augmentation, fitted.stats, cfg.seed + 1);

  TrainResult out;
  out.checkpoint.stats = fitted.stats;
  out.checkpoint.seed = cfg.seed;
  const FeatureEncoder encoder(out.checkpoint.stats);
  const EncodedSet train_set = encode_dataset(augmented, encoder);
  const EncodedSet val_set =
      val_raw.empty() ? EncodedSet{}
                      : encode_dataset(preprocess(val_raw, out.checkpoint.stats), encoder);

  Hyperparameters hyper = cfg.hyper;
  hyper.input_size = encoder.width();
  const SequenceClassifier initial = SequenceClassifier::init(cfg.arch, hyper, cfg.seed);
  FitResult fit = fit_classifier(initial, train_set, val_set, cfg, on_epoch);

  out.checkpoint.model = std::move(fit.model);
  out.history = std::move(fit.history);
  out.best_epoch = fit.best_epoch;
  out.train_size = train_set.size();
  out.validation_size = val_set.size();
  if (!split.test.empty()) {
    out.test = evaluate_encoded(
        out.checkpoint.model,
        encode_dataset(preprocess(split.test, out.checkpoint.stats), encoder));
  }
  return out;
}

// Metrics of a checkpoint on raw labelled subjects. Does not modify `ckpt`.
inline Metrics evaluate(const ModelCheckpoint& ckpt,
                        const std::vector<PatientSequence>& data) {
  if (data.empty()) throw ContractError("evaluate: empty dataset");
  const FeatureEncoder encoder = ckpt.encoder();
  if (encoder.width() != ckpt.model.input_size()) {
    throw SchemaError("model expects " + std::to_string(ckpt.model.input_size()) +
                      " encoded features, statistics give " +
                      std::to_string(encoder.width()));
  }
  return evaluate_encoded(ckpt.model,
                          encode_dataset(preprocess(data, ckpt.stats), encoder));
}

inline void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_number(r.train.mean_loss) << ','
        << format_number(r.train.accuracy) << ','
        << format_number(r.validation.mean_loss) << ','
        << format_number(r.validation.accuracy) << '\n';
  }
}

}  // namespace sleepx

#endif  // SLEEPX_TRAINING_HPP_
