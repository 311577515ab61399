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

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "sleepx/training.hpp"

namespace sleepx {
namespace {

using namespace feature;

std::vector<PatientSequence> labelled(std::size_t positives, std::size_t negatives) {
  auto data = synth_generate(positives + negatives, 3, 77);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].label = i < positives ? Label::kInsomnia : Label::kNone;
  }
  return data;
}

std::size_t count_label(const std::vector<PatientSequence>& data, Label label) {
  std::size_t n = 0;
  for (const auto& s : data) n += s.label == label;
  return n;
}

TEST(Split, SizesAndDisjointness) {
  const auto data = synth_generate(422, 3, 7);
  const DatasetSplit split = split_dataset(data, 400, 22, 7);
  EXPECT_EQ(split.train.size(), 400u);
  EXPECT_EQ(split.test.size(), 22u);
  std::set<std::string> ids;
  for (const auto& s : split.train) ids.insert(s.subject_id);
  for (const auto& s : split.test) EXPECT_EQ(ids.count(s.subject_id), 0u);
  for (const auto& s : split.test) ids.insert(s.subject_id);
  EXPECT_EQ(ids.size(), 422u);
}

TEST(Split, StratifiedByLabel) {
  const auto data = labelled(100, 300);
  const DatasetSplit split = split_dataset(data, 300, 100, 3);
  EXPECT_EQ(count_label(split.test, Label::kInsomnia), 25u);
  EXPECT_EQ(count_label(split.train, Label::kInsomnia), 75u);
}

TEST(Split, WholeDatasetAsTrain) {
  const auto data = synth_generate(30, 2, 1);
  const DatasetSplit split = split_dataset(data, 30, 0, 1);
  EXPECT_TRUE(split.test.empty());
  EXPECT_EQ(split.train, data);
}

TEST(Split, DeterministicGivenSeed) {
  const auto data = synth_generate(100, 2, 1);
  const auto a = split_dataset(data, 80, 20, 5), b = split_dataset(data, 80, 20, 5);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(split_dataset(data, 80, 20, 6).test, a.test);
}

TEST(Split, InsufficientDataIsSizeError) {
  EXPECT_THROW(split_dataset(synth_generate(10, 2, 1), 8, 3, 1), SizeError);
}

NormalizationStats stats_for(const std::vector<PatientSequence>& data) {
  return preprocess(data).stats;
}

TEST(Augment, ZeroSigmaNoOversampleIsIdentity) {
  const auto data = preprocess(synth_generate(20, 3, 2)).sequences;
  const auto out = augment(data, {0.0, Oversample::kNone, 1.0}, stats_for(data), 9);
  EXPECT_EQ(out, data);
}

TEST(Augment, OversampleFactorTwoDoublesMinority) {
  const auto data = labelled(10, 30);
  const auto out =
      augment(data, {0.0, Oversample::kFactor, 2.0}, NormalizationStats{}, 1);
  EXPECT_EQ(count_label(out, Label::kInsomnia), 20u);
  EXPECT_EQ(count_label(out, Label::kNone), 30u);
}

TEST(Augment, BalanceGrowsMinorityToMajority) {
  const auto data = labelled(7, 30);
  const auto out = augment(data, {0.0, Oversample::kBalance, 1.0}, NormalizationStats{}, 1);
  EXPECT_EQ(count_label(out, Label::kInsomnia), 30u);
  EXPECT_GE(out.size(), data.size());
}

TEST(Augment, JitterMeanShiftWithinStatisticalBound) {
  const auto data = preprocess(synth_generate(400, 7, 4)).sequences;
  const NormalizationStats stats = stats_for(data);
  const double sigma = 0.01;
  const auto out = augment(data, {sigma, Oversample::kNone, 1.0}, stats, 5);
  const FeatureEncoder enc(stats);
  for (std::size_t f : {kSleepDuration, kPhysicalActivity, kSystolicBp, kDiastolicBp,
                        kDailySteps}) {
    const std::size_t col = enc.block_of(f).offset;
    double shift = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Tensor a = enc.encode(data[i]), b = enc.encode(out[i]);
      for (std::size_t t = 0; t < a.shape()[0]; ++t) {
        shift += b.at(t, col) - a.at(t, col);
        ++n;
      }
    }
    EXPECT_LT(std::abs(shift / n), 3.0 * sigma / std::sqrt(static_cast<double>(n)))
        << Schema::sleep_health()[f].name;
  }
}

TEST(Augment, NeverTouchesLabelsCategoriesOrLengths) {
  const auto data = preprocess(synth_generate(60, 5, 4)).sequences;
  const auto out = augment(data, {0.5, Oversample::kFactor, 3.0}, stats_for(data), 6);
  ASSERT_GE(out.size(), data.size());
  std::map<std::string, const PatientSequence*> by_id;
  for (const auto& s : data) by_id[s.subject_id] = &s;
  for (const auto& s : out) {
    const auto* src = by_id.at(s.subject_id.substr(0, s.subject_id.find('#')));
    EXPECT_EQ(s.label, src->label);
    ASSERT_EQ(s.length(), src->length());
    for (std::size_t t = 0; t < s.length(); ++t) {
      for (std::size_t f : {kGender, kOccupation, kBmiCategory, kQualityOfSleep,
                            kStressLevel, kHeartRate, kAge}) {
        EXPECT_EQ(s.timesteps[t].cells[f], src->timesteps[t].cells[f]);
      }
    }
  }
}

TEST(Augment, NegativeSigmaIsContractError) {
  EXPECT_THROW(augment({}, {-0.1, Oversample::kNone, 1.0}, NormalizationStats{}, 1),
               ContractError);
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  Tensor w = Tensor::vector({1.0, -2.0, 0.5}, true);
  Optimizer opt({w}, {});
  opt.step({{0.3, -4.0, 0.0}});
  // Bias-corrected first step: m_hat / sqrt(v_hat) = sign(g).
  EXPECT_NEAR(w[0], 1.0 - 1e-3, 1e-10);
  EXPECT_NEAR(w[1], -2.0 + 1e-3, 1e-10);
  EXPECT_EQ(w[2], 0.5);
}

TEST(Optimizer, SgdWithMomentum) {
  Tensor w = Tensor::vector({1.0}, true);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kSgd;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.5;
  Optimizer opt({w}, cfg);
  opt.step({{2.0}});
  EXPECT_NEAR(w[0], 0.8, 1e-15);
  opt.step({{2.0}});
  EXPECT_NEAR(w[0], 0.8 - 0.1 * 3.0, 1e-15);
}

// Class 1 iff the first feature is positive at the last step.
EncodedSet separable_set(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  EncodedSet set;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(4 * 2);
    for (double& x : v) x = rng.normal(0.0, 1.0);
    const bool positive = i % 2 == 0;
    v[3 * 2] = positive ? 1.0 + std::abs(v[3 * 2]) : -1.0 - std::abs(v[3 * 2]);
    set.inputs.push_back(Tensor({4, 2}, v));
    set.labels.push_back(positive ? 1 : 0);
  }
  return set;
}

TrainConfig small_config(Arch arch = Arch::kLstm) {
  TrainConfig cfg;
  cfg.arch = arch;
  cfg.hyper.hidden_size = 8;
  cfg.hyper.tcn_channels = 6;
  cfg.epochs = 200;
  cfg.batch_size = 16;
  cfg.optimizer.learning_rate = 0.01;
  cfg.early_stop_patience = 200;
  cfg.seed = 3;
  return cfg;
}

SequenceClassifier separable_model(std::uint64_t seed) {
  Hyperparameters h;
  h.input_size = 2;
  h.hidden_size = 8;
  h.n_classes = 2;
  return SequenceClassifier::init(Arch::kLstm, h, seed);
}

TEST(Fit, SeparableSetReachesPerfectTrainingAccuracy) {
  const EncodedSet train = separable_set(64, 1);
  const FitResult fit =
      fit_classifier(separable_model(1), train, separable_set(32, 2), small_config());
  const Metrics m = evaluate_encoded(fit.model, train);
  EXPECT_GE(m.accuracy, 0.99);
  EXPECT_LE(fit.history.size(), 200u);
  EXPECT_DOUBLE_EQ(evaluate_encoded(fit.model, train).accuracy, 1.0);
}

TEST(Fit, EarlyStoppingReturnsBestValidationSnapshot) {
  const EncodedSet train = separable_set(40, 3), val = separable_set(20, 4);
  TrainConfig cfg = small_config();
  cfg.early_stop_patience = 5;
  cfg.epochs = 300;
  const FitResult fit = fit_classifier(separable_model(2), train, val, cfg);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : fit.history) best = std::min(best, r.validation.mean_loss);
  EXPECT_EQ(fit.history[fit.best_epoch - 1].validation.mean_loss, best);
  EXPECT_EQ(evaluate_encoded(fit.model, val).mean_loss, best);
  // Stopped after `patience` epochs without improvement, or ran out.
  EXPECT_TRUE(fit.history.size() == fit.best_epoch + 5 || fit.history.size() == 300u);
}

TEST(Fit, ZeroLearningRateKeepsInitialWeights) {
  const SequenceClassifier initial = separable_model(5);
  TrainConfig cfg = small_config();
  cfg.epochs = 6;
  cfg.optimizer.learning_rate = 0.0;
  const FitResult fit =
      fit_classifier(initial, separable_set(30, 5), separable_set(10, 6), cfg);
  const auto a = initial.named_parameters(), b = fit.model.named_parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].second.values(), b[i].second.values()) << a[i].first;
  }
  for (const auto& r : fit.history) {
    EXPECT_NEAR(r.train.mean_loss, fit.history[0].train.mean_loss, 1e-12);
    EXPECT_EQ(r.validation.mean_loss, fit.history[0].validation.mean_loss);
  }
}

TEST(Fit, NonFiniteLossReportsEpoch) {
  EncodedSet train = separable_set(8, 7);
  train.inputs[3].mutable_data()[0] = std::nan("");
  try {
    fit_classifier(separable_model(3), train, {}, small_config());
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.epoch(), 1u);
  }
}

TEST(Fit, ParallelShardsAreReproducibleAndMatchSerial) {
  const EncodedSet train = separable_set(48, 8), val = separable_set(16, 9);
  TrainConfig cfg = small_config();
  cfg.epochs = 5;
  const FitResult serial = fit_classifier(separable_model(4), train, val, cfg);
  cfg.threads = 3;
  const FitResult a = fit_classifier(separable_model(4), train, val, cfg);
  const FitResult b = fit_classifier(separable_model(4), train, val, cfg);
  const auto pa = a.model.parameters(), pb = b.model.parameters(),
             ps = serial.model.parameters();
  for (std::size_t k = 0; k < pa.size(); ++k) {
    EXPECT_EQ(pa[k].values(), pb[k].values());
    for (std::size_t i = 0; i < pa[k].numel(); ++i) {
      EXPECT_NEAR(pa[k].values()[i], ps[k].values()[i], 1e-8);
    }
  }
}

TEST(Fit, ConfigValidation) {
  TrainConfig cfg;
  cfg.optimizer.learning_rate = -1.0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = TrainConfig{};
  cfg.augmentation.jitter_sigma = -0.5;
  EXPECT_THROW(cfg.validate(), ContractError);
}

DatasetSplit small_split() {
  return split_dataset(synth_generate(120, 4, 12), 100, 20, 12);
}

TEST(Train, DeterministicGivenSeed) {
  TrainConfig cfg = small_config(Arch::kTcn);
  cfg.epochs = 4;
  const auto a = train(small_split(), cfg), b = train(small_split(), cfg);
  EXPECT_EQ(checkpoint_dump(a.checkpoint), checkpoint_dump(b.checkpoint));
  std::ostringstream ha, hb;
  write_history_csv(ha, a.history);
  write_history_csv(hb, b.history);
  EXPECT_EQ(ha.str(), hb.str());
  EXPECT_EQ(ha.str().rfind("epoch,train_loss,train_acc,val_loss,val_acc\n", 0), 0u);
}

TEST(Train, ValidationCarvedFromTrainingSplit) {
  TrainConfig cfg = small_config(Arch::kTcn);
  cfg.epochs = 2;
  cfg.augmentation = Augmentation::none();
  const auto r = train(small_split(), cfg);
  EXPECT_EQ(r.validation_size, 10u);
  EXPECT_EQ(r.train_size, 90u);
  ASSERT_TRUE(r.test.has_value());
  EXPECT_EQ(r.test->total(), 20u);
}

TEST(Evaluate, UniformPredictorLossIsLogThree) {
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  auto r = train(small_split(), cfg);
  auto& head = r.checkpoint.model.head;
  head.weight = Tensor::zeros(head.weight.shape());
  head.bias = Tensor::zeros(head.bias.shape());
  const Metrics m = evaluate(r.checkpoint, small_split().test);
  EXPECT_NEAR(m.mean_loss, std::log(3.0), 1e-12);
}

TEST(Evaluate, ConfusionConsistentAndPure) {
  TrainConfig cfg = small_config(Arch::kTft);
  cfg.epochs = 3;
  const auto r = train(small_split(), cfg);
  const auto data = small_split().test;
  const std::string before = checkpoint_hash(r.checkpoint);
  const Metrics a = evaluate(r.checkpoint, data), b = evaluate(r.checkpoint, data);
  EXPECT_EQ(a, b);
  EXPECT_EQ(checkpoint_hash(r.checkpoint), before);
  EXPECT_DOUBLE_EQ(a.accuracy, static_cast<double>(a.correct()) / a.total());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t row = 0;
    for (std::size_t v : a.confusion[c]) row += v;
    EXPECT_EQ(row, count_label(data, static_cast<Label>(c)));
  }
  // Recompute from stored per-instance predictions.
  std::size_t correct = 0;
  for (const auto& s : data) correct += predict_sequence(r.checkpoint, s).predicted ==
                                        static_cast<std::size_t>(*s.label);
  EXPECT_EQ(correct, a.correct());
}

TEST(Evaluate, UnlabelledSubjectIsContractError) {
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  const auto r = train(small_split(), cfg);
  auto data = small_split().test;
  data[0].label.reset();
  EXPECT_THROW(evaluate(r.checkpoint, data), ContractError);
}

// The acceptance benchmark configuration, trained once for the slower checks.
const TrainResult& benchmark_lstm() {
  static const TrainResult result = [] {
    const auto split = split_dataset(synth_generate(422, 7, 7), 400, 22, 7);
    TrainConfig cfg;
    cfg.arch = Arch::kLstm;
    cfg.seed = 7;
    return train(split, cfg);
  }();
  return result;
}

TEST(Benchmark, EarlyEpochLossDecreases) {
  const auto& h = benchmark_lstm().history;
  ASSERT_GE(h.size(), 5u);
  EXPECT_LT(h[4].train.mean_loss, h[0].train.mean_loss);
}

TEST(Benchmark, RulePositiveInstanceIsPredictedDisorder) {
  PatientSequence seq = synth_generate(1, 7, 123).front();
  for (auto& fv : seq.timesteps) {
    fv.cells[kQualityOfSleep] = 4.0;
    fv.cells[kStressLevel] = 8.0;
    fv.cells[kHeartRate] = 82.0;
  }
  const Prediction p = predict_sequence(benchmark_lstm().checkpoint, seq);
  EXPECT_GT(p.probs[1] + p.probs[2], 0.5);
}

}  // namespace
}  // namespace sleepx
