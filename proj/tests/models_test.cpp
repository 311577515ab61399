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
#include <filesystem>
#include <numeric>

#include "sleepx/checkpoint.hpp"
#include "sleepx/models.hpp"
#include "test_util.hpp"

namespace sleepx {
namespace {

using testing::check_gradients;
using testing::random_tensor;

double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Direct evaluation of the cell equations on plain vectors.
struct RefStep {
  std::vector<double> h, c;
};
RefStep lstm_step_ref(const LstmParams& p, const std::vector<double>& x,
                      const std::vector<double>& h, const std::vector<double>& c) {
  const std::size_t H = p.hidden_size, I = p.input_size;
  std::vector<double> z(h);
  z.insert(z.end(), x.begin(), x.end());
  auto row = [&](const Tensor& w, const Tensor& b, std::size_t r) {
    double acc = b.values()[r];
    for (std::size_t k = 0; k < H + I; ++k) acc += w.values()[r * (H + I) + k] * z[k];
    return acc;
  };
  RefStep out{std::vector<double>(H), std::vector<double>(H)};
  for (std::size_t r = 0; r < H; ++r) {
    const double i = sigmoid_ref(row(p.input_gate_w, p.input_gate_b, r));
    const double f = sigmoid_ref(row(p.forget_gate_w, p.forget_gate_b, r));
    const double o = sigmoid_ref(row(p.output_gate_w, p.output_gate_b, r));
    const double g = std::tanh(row(p.candidate_w, p.candidate_b, r));
    out.c[r] = f * c[r] + i * g;
    out.h[r] = o * std::tanh(out.c[r]);
  }
  return out;
}

TEST(LstmCell, ZeroParametersGiveHalfGatesAndZeroState) {
  const LstmParams p = LstmParams::zeros(3, 4);
  const LstmStep s = lstm_cell_step(p, Tensor::vector({1, -2, 3}),
                                    Tensor::zeros({4}), Tensor::zeros({4}));
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(s.input_gate[r], 0.5);
    EXPECT_EQ(s.forget_gate[r], 0.5);
    EXPECT_EQ(s.output_gate[r], 0.5);
    EXPECT_EQ(s.cell[r], 0.0);
    EXPECT_EQ(s.hidden[r], 0.0);
  }
}

TEST(LstmCell, SaturatedGatesCarryMemory) {
  Rng rng(4);
  LstmParams p = LstmParams::init(3, 4, rng);
  p.forget_gate_b = Tensor::full({4}, 30.0, true);
  p.input_gate_b = Tensor::full({4}, -30.0, true);
  const Tensor c_prev = Tensor::vector({0.7, -1.3, 2.5, 0.01});
  const LstmStep s = lstm_cell_step(p, Tensor::vector({0.2, -0.4, 0.9}),
                                    Tensor::vector({0.1, 0.2, -0.3, 0.4}), c_prev);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(s.cell[r], c_prev[r], 1e-9);
}

TEST(LstmCell, MatchesReferenceEquations) {
  Rng rng(5);
  const LstmParams p = LstmParams::init(3, 5, rng);
  const std::vector<double> x = {0.3, -0.8, 1.1};
  const std::vector<double> h = {0.1, -0.2, 0.3, 0.0, 0.5};
  const std::vector<double> c = {1.0, -0.5, 0.25, 2.0, -1.5};
  const LstmStep s = lstm_cell_step(p, Tensor::vector(x), Tensor::vector(h),
                                    Tensor::vector(c));
  const RefStep ref = lstm_step_ref(p, x, h, c);
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_NEAR(s.cell[r], ref.c[r], 1e-12);
    EXPECT_NEAR(s.hidden[r], ref.h[r], 1e-12);
  }
}

TEST(LstmCell, GatesInUnitIntervalAndCellBounded) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const LstmParams p = LstmParams::init(4, 6, rng);
    const Tensor c_prev = random_tensor({6}, rng, -3, 3);
    const LstmStep s = lstm_cell_step(p, random_tensor({4}, rng, -2, 2),
                                      random_tensor({6}, rng), c_prev);
    for (std::size_t r = 0; r < 6; ++r) {
      for (const Tensor* g : {&s.input_gate, &s.forget_gate, &s.output_gate}) {
        EXPECT_GT((*g)[r], 0.0);
        EXPECT_LT((*g)[r], 1.0);
      }
      EXPECT_LE(std::abs(s.cell[r]), std::abs(c_prev[r]) + 1.0);
    }
  }
}

TEST(LstmCell, ShapeMismatchIsDimensionError) {
  const LstmParams p = LstmParams::zeros(3, 4);
  EXPECT_THROW(lstm_cell_step(p, Tensor::zeros({2}), Tensor::zeros({4}),
                              Tensor::zeros({4})),
               DimensionError);
  EXPECT_THROW(lstm_cell_step(p, Tensor::zeros({3}), Tensor::zeros({5}),
                              Tensor::zeros({4})),
               DimensionError);
}

TEST(LstmCell, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  const LstmParams p = LstmParams::init(3, 4, rng);
  const Tensor x = random_tensor({3}, rng);
  const auto report = check_gradients(
      [&] {
        const LstmStep s =
            lstm_cell_step(p, x, Tensor::zeros({4}), Tensor::zeros({4}));
        return sum(mul(s.hidden, Tensor::vector({1.0, -2.0, 0.5, 3.0})));
      },
      [&] {
        std::vector<Tensor> out;
        for (auto& [n, t] : p.named_parameters()) out.push_back(t);
        return out;
      }());
  EXPECT_LT(report.max_relative_error, 1e-4) << report.worst;
}

TEST(LstmForward, SingleStepEqualsCellStep) {
  Rng rng(8);
  const LstmParams p = LstmParams::init(3, 4, rng);
  const Tensor x = random_tensor({1, 3}, rng);
  const Tensor hs = lstm_forward(p, x);
  const LstmStep s = lstm_cell_step(p, reshape(x, {3}), Tensor::zeros({4}),
                                    Tensor::zeros({4}));
  ASSERT_EQ(hs.shape(), (Shape{1, 4}));
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(hs.at(0, r), s.hidden[r]);
}

TEST(LstmForward, FoldsReferenceSteps) {
  Rng rng(9);
  const LstmParams p = LstmParams::init(2, 3, rng);
  const Tensor seq = random_tensor({6, 2}, rng);
  const Tensor hs = lstm_forward(p, seq);
  RefStep state{{0, 0, 0}, {0, 0, 0}};
  for (std::size_t t = 0; t < 6; ++t) {
    state = lstm_step_ref(p, {seq.at(t, 0), seq.at(t, 1)}, state.h, state.c);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(hs.at(t, r), state.h[r], 1e-12);
  }
}

TEST(LstmForward, ConstantInputConvergesToFixedPoint) {
  Rng rng(10);
  const LstmParams p = LstmParams::init(5, 8, rng);
  const std::size_t T = 200;
  const Tensor step = random_tensor({1, 5}, rng);
  std::vector<Tensor> rows(T, step);
  const Tensor hs = lstm_forward(p, reshape(concat_cols(rows), {T, 5}));
  std::vector<double> delta;
  for (std::size_t t = 1; t < T; ++t) {
    double d = 0.0;
    for (std::size_t r = 0; r < 8; ++r) {
      d += std::pow(hs.at(t, r) - hs.at(t - 1, r), 2);
    }
    delta.push_back(std::sqrt(d));
  }
  for (std::size_t t = 50; t < delta.size(); ++t) {
    // Round-off floor once the iteration has converged.
    EXPECT_LE(delta[t], delta[t - 1] + 1e-15) << "t=" << t + 1;
  }
  EXPECT_LT(delta.back(), 1e-8);
}

TEST(LstmForward, PrefixUnchangedByLaterInputs) {
  Rng rng(11);
  const LstmParams p = LstmParams::init(3, 4, rng);
  const Tensor a = random_tensor({8, 3}, rng);
  Tensor b = a.clone();
  for (std::size_t i = 5 * 3; i < 8 * 3; ++i) b.mutable_data()[i] += 1.0;
  const Tensor ha = lstm_forward(p, a), hb = lstm_forward(p, b);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(ha.at(t, r), hb.at(t, r));
  }
}

TEST(LstmForward, EmptySequenceIsContractError) {
  const LstmParams p = LstmParams::zeros(3, 4);
  EXPECT_THROW(lstm_forward(p, Tensor::zeros({0, 3})), ContractError);
}

AttentionParams spike_attention(double energy) {
  // e_t = score_w * tanh(h_t[0]); h = [1, 0] gives `energy`, h = 0 gives 0.
  AttentionParams p;
  p.align_w = Tensor::matrix(1, 2, {1.0, 0.0});
  p.align_b = Tensor::zeros({1});
  p.score_w = Tensor::matrix(1, 1, {energy / std::tanh(1.0)});
  p.score_b = Tensor::zeros({1});
  return p;
}

TEST(Attention, SingleStepTakesFullWeight) {
  Rng rng(12);
  const AttentionParams p = AttentionParams::init(4, 3, rng);
  const Tensor h = random_tensor({1, 4}, rng);
  const AttentionOutput out = attention_forward(p, h);
  EXPECT_EQ(out.scores[0], 1.0);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(out.context[r], h.at(0, r));
}

TEST(Attention, IdenticalStatesGiveUniformScores) {
  Rng rng(13);
  const AttentionParams p = AttentionParams::init(4, 3, rng);
  const Tensor row = random_tensor({1, 4}, rng);
  const Tensor hs = reshape(concat_cols({row, row, row, row, row}), {5, 4});
  const AttentionOutput out = attention_forward(p, hs);
  for (std::size_t t = 0; t < 5; ++t) EXPECT_NEAR(out.scores[t], 0.2, 1e-15);
}

TEST(Attention, DominantAlignmentTakesAlmostAllWeight) {
  const AttentionParams p = spike_attention(10.0);
  const Tensor hs = Tensor::matrix(5, 2, {0, 0, 0, 0, 1, 0, 0, 0, 0, 0});
  const AttentionOutput out = attention_forward(p, hs);
  EXPECT_NEAR(out.alignment[2], 10.0, 1e-12);
  // Oracle: e^10 / (e^10 + 4).
  EXPECT_NEAR(out.scores[2], std::exp(10.0) / (std::exp(10.0) + 4.0), 1e-12);
  EXPECT_GT(out.scores[2], 0.99);
  EXPECT_NEAR(out.context[0], 1.0, 0.01);
  EXPECT_NEAR(out.context[1], 0.0, 1e-12);
}

TEST(Attention, ScoresSumToOne) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const AttentionParams p = AttentionParams::init(6, 4, rng);
    const AttentionOutput out = attention_forward(p, random_tensor({3, 9, 6}, rng, -3, 3));
    for (std::size_t b = 0; b < 3; ++b) {
      double total = 0.0;
      for (std::size_t t = 0; t < 9; ++t) total += out.scores.at(b, t);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Tcn, IdentityBlockIsReluPlusInput) {
  TcnParams p;
  TcnBlock block;
  // Only the current-step tap is non-zero.
  block.kernel = Tensor({3, 1, 1}, {0.0, 0.0, 1.0});
  block.bias = Tensor::zeros({1});
  p.blocks.push_back(block);
  const Tensor out = tcn_forward(p, Tensor::matrix(2, 1, {-1.0, 1.0}));
  EXPECT_EQ(out.at(0, 0), -1.0);
  EXPECT_EQ(out.at(1, 0), 2.0);
}

TEST(Tcn, ReceptiveFieldOfThreeBlocks) {
  Rng rng(15);
  const TcnParams p = TcnParams::init(2, 4, 3, 3, rng);
  EXPECT_EQ(p.receptive_field(), 15u);
  const std::size_t T = 40, t = 35;
  const Tensor base = random_tensor({T, 2}, rng);
  const Tensor out = tcn_forward(p, base);
  // Inputs older than t - 14 cannot reach output[t].
  for (std::size_t past = 0; past < t - 14; ++past) {
    Tensor probe = base.clone();
    probe.mutable_data()[past * 2] += 5.0;
    probe.mutable_data()[past * 2 + 1] -= 5.0;
    const Tensor moved = tcn_forward(p, probe);
    for (std::size_t c = 0; c < 4; ++c) ASSERT_EQ(moved.at(t, c), out.at(t, c));
  }
  // The oldest input inside the field does reach it.
  Tensor probe = base.clone();
  probe.mutable_data()[(t - 14) * 2] += 5.0;
  const Tensor moved = tcn_forward(p, probe);
  double change = 0.0;
  for (std::size_t c = 0; c < 4; ++c) change += std::abs(moved.at(t, c) - out.at(t, c));
  EXPECT_GT(change, 0.0);
}

TEST(Tcn, CausalAcrossAllSteps) {
  Rng rng(16);
  const TcnParams p = TcnParams::init(3, 5, 3, 3, rng);
  const Tensor a = random_tensor({12, 3}, rng);
  Tensor b = a.clone();
  b.mutable_data()[9 * 3] += 2.0;
  const Tensor oa = tcn_forward(p, a), ob = tcn_forward(p, b);
  for (std::size_t t = 0; t < 9; ++t) {
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(oa.at(t, c), ob.at(t, c));
  }
}

TEST(Tcn, GradientMatchesFiniteDifferences) {
  Rng rng(17);
  const TcnParams p = TcnParams::init(3, 4, 3, 2, rng);
  const Tensor x = random_tensor({7, 3}, rng);
  std::vector<Tensor> params;
  for (auto& [n, t] : p.named_parameters()) params.push_back(t);
  const auto report =
      check_gradients([&] { return sum(tanh(tcn_forward(p, x))); }, params);
  EXPECT_LT(report.max_relative_error, 1e-4) << report.worst;
}

TEST(Tcn, ChannelMismatchIsDimensionError) {
  Rng rng(18);
  const TcnParams p = TcnParams::init(3, 4, 3, 2, rng);
  EXPECT_THROW(tcn_forward(p, Tensor::zeros({5, 2})), DimensionError);
}

TftLiteParams zero_tft(std::size_t features) {
  Rng rng(19);
  TftLiteParams p = TftLiteParams::init(features, 4, rng);
  p.selection_w = Tensor::zeros({features, features});
  p.selection_b = Tensor::zeros({features});
  return p;
}

TEST(TftSelection, UniformScoresGiveUniformWeights) {
  const TftLiteParams p = zero_tft(14);
  Rng rng(20);
  const VariableSelection sel = tft_variable_select(p, random_tensor({14}, rng));
  for (std::size_t j = 0; j < 14; ++j) EXPECT_NEAR(sel.weights[j], 1.0 / 14, 1e-15);
}

TEST(TftSelection, DominantScoreTakesAlmostAllWeight) {
  TftLiteParams p = zero_tft(14);
  std::vector<double> bias(14, 0.0);
  bias[6] = 20.0;
  p.selection_b = Tensor::vector(bias);
  Rng rng(21);
  const VariableSelection sel = tft_variable_select(p, random_tensor({14}, rng));
  EXPECT_GT(sel.weights[6], 0.999);
}

TEST(TftSelection, ZeroProjectionGivesZeroValues) {
  Rng rng(22);
  TftLiteParams p = TftLiteParams::init(14, 4, rng);
  p.value_w = Tensor::zeros({14});
  p.value_b = Tensor::zeros({14});
  const VariableSelection sel = tft_variable_select(p, random_tensor({14}, rng, -5, 5));
  for (std::size_t j = 0; j < 14; ++j) EXPECT_EQ(sel.values[j], 0.0);
}

TEST(TftSelection, ValuesAreGatedProjections) {
  Rng rng(23);
  const TftLiteParams p = TftLiteParams::init(5, 4, rng);
  const Tensor x = random_tensor({5}, rng);
  const VariableSelection sel = tft_variable_select(p, x);
  double total = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_GE(sel.weights[j], 0.0);
    total += sel.weights[j];
    EXPECT_NEAR(sel.values[j],
                sel.weights[j] * (p.value_w[j] * x[j] + p.value_b[j]), 1e-15);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(TftSelection, FeatureCountMismatchIsDimensionError) {
  const TftLiteParams p = zero_tft(5);
  EXPECT_THROW(tft_variable_select(p, Tensor::zeros({4})), DimensionError);
}

Hyperparameters small_hyper() {
  Hyperparameters h;
  h.input_size = 14;
  h.hidden_size = 8;
  h.tcn_channels = 8;
  return h;
}

class ClassifierArch : public ::testing::TestWithParam<Arch> {};

TEST_P(ClassifierArch, EndToEndGradientMatchesFiniteDifferences) {
  const SequenceClassifier model = SequenceClassifier::init(GetParam(), small_hyper(), 3);
  Rng rng(24);
  const Tensor x = random_tensor({2, 8, 14}, rng);
  const std::vector<std::size_t> targets = {1, 2};
  const auto report = check_gradients(
      [&] { return cross_entropy(classifier_forward(model, x).logits, targets); },
      model.parameters());
  EXPECT_GT(report.checked, 0u);
  EXPECT_LT(report.max_relative_error, 1e-4) << report.worst;
}

TEST_P(ClassifierArch, PerStepInternalsAreCausal) {
  const SequenceClassifier model = SequenceClassifier::init(GetParam(), small_hyper(), 4);
  Rng rng(25);
  const Tensor a = random_tensor({8, 14}, rng);
  Tensor b = a.clone();
  for (std::size_t i = 6 * 14; i < 8 * 14; ++i) b.mutable_data()[i] -= 0.7;
  NoGradGuard no_grad;
  const ClassifierOutput oa = classifier_forward(model, a);
  const ClassifierOutput ob = classifier_forward(model, b);
  const std::size_t width = oa.hidden_states.shape()[2];
  for (std::size_t i = 0; i < 6 * width; ++i) {
    EXPECT_EQ(oa.hidden_states.values()[i], ob.hidden_states.values()[i]);
  }
  if (oa.selection_weights) {
    for (std::size_t i = 0; i < 6 * 14; ++i) {
      EXPECT_EQ(oa.selection_weights->values()[i], ob.selection_weights->values()[i]);
    }
  }
}

TEST_P(ClassifierArch, ProbabilitiesAndInternals) {
  const SequenceClassifier model = SequenceClassifier::init(GetParam(), small_hyper(), 5);
  Rng rng(26);
  NoGradGuard no_grad;
  const ClassifierOutput out = classifier_forward(model, random_tensor({3, 6, 14}, rng));
  ASSERT_EQ(out.probs.shape(), (Shape{3, 3}));
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_NEAR(out.probs.at(b, 0) + out.probs.at(b, 1) + out.probs.at(b, 2), 1.0, 1e-9);
  }
  EXPECT_EQ(out.hidden_states.shape()[1], 6u);
  EXPECT_EQ(out.attention_scores.has_value(), GetParam() != Arch::kTcn);
  EXPECT_EQ(out.selection_weights.has_value(), GetParam() == Arch::kTft);
}

TEST_P(ClassifierArch, ZeroHeadGivesUniformProbabilities) {
  SequenceClassifier model = SequenceClassifier::init(GetParam(), small_hyper(), 6);
  model.head.weight = Tensor::zeros(model.head.weight.shape());
  model.head.bias = Tensor::zeros({3});
  Rng rng(27);
  NoGradGuard no_grad;
  const Tensor probs = classifier_forward(model, random_tensor({5, 14}, rng)).probs;
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(probs.at(0, c), 1.0 / 3, 1e-15);
}

TEST_P(ClassifierArch, ArgmaxInvariantToCommonBiasShift) {
  SequenceClassifier model = SequenceClassifier::init(GetParam(), small_hyper(), 7);
  Rng rng(28);
  const Tensor x = random_tensor({10, 5, 14}, rng);
  NoGradGuard no_grad;
  const Tensor before = classifier_forward(model, x).probs;
  for (double& v : model.head.bias.mutable_data()) v += 17.5;
  const Tensor after = classifier_forward(model, x).probs;
  for (std::size_t b = 0; b < 10; ++b) {
    std::size_t arg_before = 0, arg_after = 0;
    for (std::size_t c = 1; c < 3; ++c) {
      if (before.at(b, c) > before.at(b, arg_before)) arg_before = c;
      if (after.at(b, c) > after.at(b, arg_after)) arg_after = c;
    }
    EXPECT_EQ(arg_before, arg_after);
  }
}

TEST_P(ClassifierArch, WrongFeatureCountNamesExpectedWidth) {
  const SequenceClassifier model = SequenceClassifier::init(GetParam(), small_hyper(), 8);
  try {
    classifier_forward(model, Tensor::zeros({4, 13}));
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("14"), std::string::npos);
  }
}

TEST_P(ClassifierArch, CloneSharesNoStorage) {
  const SequenceClassifier model = SequenceClassifier::init(GetParam(), small_hyper(), 9);
  SequenceClassifier copy = model.clone();
  const auto a = model.named_parameters(), b = copy.named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_FALSE(a[i].second.same_node(b[i].second));
    EXPECT_EQ(a[i].second.values(), b[i].second.values());
  }
}

ModelCheckpoint make_checkpoint(Arch arch) {
  const auto fitted = preprocess(synth_generate(30, 4, 2));
  Hyperparameters h;
  h.input_size = FeatureEncoder(fitted.stats).width();
  h.hidden_size = 6;
  h.tcn_channels = 5;
  return {SequenceClassifier::init(arch, h, 31), fitted.stats, 31};
}

TEST_P(ClassifierArch, CheckpointRoundTripIsBitExact) {
  const ModelCheckpoint ckpt = make_checkpoint(GetParam());
  const std::string path = ::testing::TempDir() + "sleepx_ckpt_" +
                           arch_name(GetParam()) + ".json";
  save_checkpoint(ckpt, path);
  const ModelCheckpoint back = load_checkpoint(path);
  EXPECT_EQ(checkpoint_dump(back), checkpoint_dump(ckpt));
  EXPECT_EQ(back.stats, ckpt.stats);
  EXPECT_EQ(back.seed, 31u);
  const auto a = ckpt.model.named_parameters(), b = back.model.named_parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].second.values(), b[i].second.values()) << a[i].first;
  }
  const auto seqs = synth_generate(3, 4, 99);
  for (const auto& s : seqs) {
    EXPECT_EQ(predict_sequence(ckpt, s).probs, predict_sequence(back, s).probs);
  }
  EXPECT_EQ(checkpoint_hash(ckpt), checkpoint_hash(back));
  EXPECT_EQ(checkpoint_hash(ckpt).size(), 64u);
}

INSTANTIATE_TEST_SUITE_P(AllArchitectures, ClassifierArch,
                         ::testing::Values(Arch::kLstm, Arch::kTcn, Arch::kTft),
                         [](const auto& info) { return arch_name(info.param); });

TEST(Checkpoint, RejectsMismatchedWeights) {
  const ModelCheckpoint ckpt = make_checkpoint(Arch::kLstm);
  nlohmann::json j = checkpoint_to_json(ckpt);
  j["weights"]["head.bias"]["shape"] = {4};
  EXPECT_THROW(checkpoint_from_json(j), SchemaError);
  j = checkpoint_to_json(ckpt);
  j["schema_version"] = 99;
  EXPECT_THROW(checkpoint_from_json(j), SchemaError);
  j = checkpoint_to_json(ckpt);
  j.erase("weights");
  EXPECT_THROW(checkpoint_from_json(j), SchemaError);
}

TEST(Checkpoint, HashChangesWithWeights) {
  ModelCheckpoint ckpt = make_checkpoint(Arch::kTcn);
  const std::string before = checkpoint_hash(ckpt);
  ckpt.model.head.bias.mutable_data()[0] += 1e-12;
  EXPECT_NE(checkpoint_hash(ckpt), before);
}

TEST(Checkpoint, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace sleepx
