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

// Sequence classifiers: an LSTM with a temporal attention head, a causal
// dilated TCN, and a reduced temporal fusion model (per-step variable
// selection, LSTM encoder, attention head). All forwards accept a single
// sequence [T x F] or a batch of equal-length sequences [B x T x F].

#ifndef SLEEPX_MODELS_HPP_
#define SLEEPX_MODELS_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sleepx/error.hpp"
#include "sleepx/ops.hpp"
#include "sleepx/random.hpp"
#include "sleepx/tensor.hpp"

namespace sleepx {

enum class Arch { kLstm, kTcn, kTft };

inline std::string arch_name(Arch arch) {
  switch (arch) {
    case Arch::kLstm:
      return "lstm";
    case Arch::kTcn:
      return "tcn";
    case Arch::kTft:
      return "tft";
  }
  return "unknown";
}

inline Arch parse_arch(const std::string& name) {
  if (name == "lstm" || name == "LSTM") return Arch::kLstm;
  if (name == "tcn" || name == "TCN") return Arch::kTcn;
  if (name == "tft" || name == "TFT") return Arch::kTft;
  throw ContractError("unknown architecture '" + name + "' (lstm|tcn|tft)");
}

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

namespace detail {

inline Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(values), true);
}

// Views a [T x F] sequence as a batch of one; batches pass through.
inline Tensor as_batch(const Tensor& seq, const char* op) {
  if (seq.rank() == 3) return seq;
  if (seq.rank() == 2) return reshape(seq, {1, seq.shape()[0], seq.shape()[1]});
  throw DimensionError(std::string(op) + ": expected [T x F] or [B x T x F], got " +
                       shape_str(seq.shape()));
}

inline Tensor unbatch(const Tensor& out, bool batched) {
  if (batched) return out;
  Shape shape(out.shape().begin() + 1, out.shape().end());
  return reshape(out, std::move(shape));
}

inline void require_shape(const Tensor& t, const Shape& shape,
                          const std::string& what) {
  if (!t.defined() || t.shape() != shape) {
    throw DimensionError(what + ": expected " + shape_str(shape) + ", got " +
                         (t.defined() ? shape_str(t.shape()) : "undefined"));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// LSTM

// Gate weights act on the concatenation [h_prev, x_t].
struct LstmParams {
  Tensor input_gate_w, forget_gate_w, output_gate_w, candidate_w;
  Tensor input_gate_b, forget_gate_b, output_gate_b, candidate_b;
  std::size_t hidden_size = 0;
  std::size_t input_size = 0;

  static LstmParams init(std::size_t input_size, std::size_t hidden_size,
                         Rng& rng) {
    LstmParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    const std::size_t fan_in = hidden_size + input_size;
    const Shape w{hidden_size, fan_in};
    p.input_gate_w = detail::uniform_init(w, fan_in, rng);
    p.forget_gate_w = detail::uniform_init(w, fan_in, rng);
    p.output_gate_w = detail::uniform_init(w, fan_in, rng);
    p.candidate_w = detail::uniform_init(w, fan_in, rng);
    p.input_gate_b = Tensor::zeros({hidden_size}, true);
    p.forget_gate_b = Tensor::full({hidden_size}, 1.0, true);
    p.output_gate_b = Tensor::zeros({hidden_size}, true);
    p.candidate_b = Tensor::zeros({hidden_size}, true);
    return p;
  }

  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size) {
    LstmParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    const Shape w{hidden_size, hidden_size + input_size};
    for (Tensor* t : {&p.input_gate_w, &p.forget_gate_w, &p.output_gate_w,
                      &p.candidate_w}) {
      *t = Tensor::zeros(w, true);
    }
    for (Tensor* t : {&p.input_gate_b, &p.forget_gate_b, &p.output_gate_b,
                      &p.candidate_b}) {
      *t = Tensor::zeros({hidden_size}, true);
    }
    return p;
  }

  NamedTensors named_parameters() const {
    return {{"input_gate_w", input_gate_w},   {"forget_gate_w", forget_gate_w},
            {"output_gate_w", output_gate_w}, {"candidate_w", candidate_w},
            {"input_gate_b", input_gate_b},   {"forget_gate_b", forget_gate_b},
            {"output_gate_b", output_gate_b}, {"candidate_b", candidate_b}};
  }

  void validate() const {
    const Shape w{hidden_size, hidden_size + input_size};
    detail::require_shape(input_gate_w, w, "lstm input gate weight");
    detail::require_shape(forget_gate_w, w, "lstm forget gate weight");
    detail::require_shape(output_gate_w, w, "lstm output gate weight");
    detail::require_shape(candidate_w, w, "lstm candidate weight");
    for (const Tensor* b :
         {&input_gate_b, &forget_gate_b, &output_gate_b, &candidate_b}) {
      detail::require_shape(*b, {hidden_size}, "lstm bias");
    }
  }
};

struct LstmStep {
  Tensor hidden;
  Tensor cell;
  Tensor input_gate;
  Tensor forget_gate;
  Tensor output_gate;
};

// One recurrence step. Vectors ([input], [hidden]) or batches
// ([B x input], [B x hidden]) are accepted; the output matches.
inline LstmStep lstm_cell_step(const LstmParams& params, const Tensor& x_t,
                               const Tensor& h_prev, const Tensor& c_prev) {
  const bool vector_form = x_t.rank() == 1;
  auto as_rows = [&](const Tensor& t) {
    return vector_form ? reshape(t, {1, t.numel()}) : t;
  };
  const Tensor x = as_rows(x_t), h = as_rows(h_prev), c = as_rows(c_prev);
  if (x.rank() != 2 || x.shape()[1] != params.input_size) {
    throw DimensionError("lstm_cell_step: input " + shape_str(x_t.shape()) +
                         " does not match input_size " +
                         std::to_string(params.input_size));
  }
  const Shape state{x.shape()[0], params.hidden_size};
  if (h.shape() != state || c.shape() != state) {
    throw DimensionError("lstm_cell_step: state shapes " +
                         shape_str(h_prev.shape()) + "/" +
                         shape_str(c_prev.shape()) + " do not match hidden_size " +
                         std::to_string(params.hidden_size));
  }
  const Tensor joined = concat_cols({h, x});
  const Tensor i = sigmoid(affine(joined, params.input_gate_w, params.input_gate_b));
  const Tensor f =
      sigmoid(affine(joined, params.forget_gate_w, params.forget_gate_b));
  const Tensor o =
      sigmoid(affine(joined, params.output_gate_w, params.output_gate_b));
  const Tensor candidate =
      tanh(affine(joined, params.candidate_w, params.candidate_b));
  const Tensor cell = f * c + i * candidate;
  const Tensor hidden = o * tanh(cell);
  if (!vector_form) return {hidden, cell, i, f, o};
  const Shape v{params.hidden_size};
  return {reshape(hidden, v), reshape(cell, v), reshape(i, v), reshape(f, v),
          reshape(o, v)};
}

// Folds lstm_cell_step over time from zero state. [T x I] -> [T x H],
// [B x T x I] -> [B x T x H].
inline Tensor lstm_forward(const LstmParams& params, const Tensor& seq) {
  const bool batched = seq.rank() == 3;
  const Tensor x = detail::as_batch(seq, "lstm_forward");
  const std::size_t batch = x.shape()[0], steps = x.shape()[1];
  if (steps == 0) throw ContractError("lstm_forward: empty sequence");
  Tensor h = Tensor::zeros({batch, params.hidden_size});
  Tensor c = Tensor::zeros({batch, params.hidden_size});
  std::vector<Tensor> outputs;
  outputs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    LstmStep step = lstm_cell_step(params, time_step(x, t), h, c);
    h = step.hidden;
    c = step.cell;
    outputs.push_back(h);
  }
  return detail::unbatch(stack_time(outputs), batched);
}

// ---------------------------------------------------------------------------
// Temporal attention

// Alignment e_t = score_w . tanh(align_w h_t + align_b) + score_b.
struct AttentionParams {
  Tensor align_w;  // [A x H]
  Tensor align_b;  // [A]
  Tensor score_w;  // [1 x A]
  Tensor score_b;  // [1]

  static AttentionParams init(std::size_t hidden, std::size_t attn_dim,
                              Rng& rng) {
    AttentionParams p;
    p.align_w = detail::uniform_init({attn_dim, hidden}, hidden, rng);
    p.align_b = Tensor::zeros({attn_dim}, true);
    p.score_w = detail::uniform_init({1, attn_dim}, attn_dim, rng);
    p.score_b = Tensor::zeros({1}, true);
    return p;
  }

  NamedTensors named_parameters() const {
    return {{"align_w", align_w},
            {"align_b", align_b},
            {"score_w", score_w},
            {"score_b", score_b}};
  }

  std::size_t hidden_size() const { return align_w.shape()[1]; }
};

struct AttentionOutput {
  Tensor context;    // [H] or [B x H]
  Tensor scores;     // [T] or [B x T], softmax-normalized
  Tensor alignment;  // raw e_t, same shape as scores
};

inline AttentionOutput attention_forward(const AttentionParams& params,
                                         const Tensor& hidden_states) {
  const bool batched = hidden_states.rank() == 3;
  const Tensor hs = detail::as_batch(hidden_states, "attention_forward");
  const std::size_t batch = hs.shape()[0], steps = hs.shape()[1],
                    hidden = hs.shape()[2];
  if (steps == 0) throw ContractError("attention_forward: empty sequence");
  if (hidden != params.hidden_size()) {
    throw DimensionError("attention_forward: hidden width " +
                         std::to_string(hidden) + " does not match alignment " +
                         shape_str(params.align_w.shape()));
  }
  const Tensor flat = reshape(hs, {batch * steps, hidden});
  const Tensor energy =
      affine(tanh(affine(flat, params.align_w, params.align_b)), params.score_w,
             params.score_b);
  const Tensor alignment = reshape(energy, {batch, steps});
  const Tensor scores = softmax(alignment);
  const Tensor context = weighted_time_sum(scores, hs);
  if (batched) return {context, scores, alignment};
  return {reshape(context, {hidden}), reshape(scores, {steps}),
          reshape(alignment, {steps})};
}

// ---------------------------------------------------------------------------
// TCN

struct TcnBlock {
  Tensor kernel;  // [k x C_in x C_out]
  Tensor bias;    // [C_out]
  std::size_t dilation = 1;
  // 1x1 projection for the residual path; undefined when C_in == C_out.
  Tensor residual_kernel;
  Tensor residual_bias;

  std::size_t width() const { return kernel.shape()[0]; }
  std::size_t in_channels() const { return kernel.shape()[1]; }
  std::size_t out_channels() const { return kernel.shape()[2]; }
};

struct TcnParams {
  std::vector<TcnBlock> blocks;
  bool residual = true;

  // Blocks with dilations 1, 2, 4, ... and `channels` outputs each.
  static TcnParams init(std::size_t input, std::size_t channels,
                        std::size_t kernel_width, std::size_t levels, Rng& rng) {
    TcnParams p;
    std::size_t c_in = input;
    for (std::size_t level = 0; level < levels; ++level) {
      TcnBlock block;
      block.dilation = std::size_t{1} << level;
      block.kernel = detail::uniform_init({kernel_width, c_in, channels},
                                          kernel_width * c_in, rng);
      block.bias = Tensor::zeros({channels}, true);
      if (c_in != channels) {
        block.residual_kernel =
            detail::uniform_init({1, c_in, channels}, c_in, rng);
        block.residual_bias = Tensor::zeros({channels}, true);
      }
      p.blocks.push_back(std::move(block));
      c_in = channels;
    }
    return p;
  }

  // Number of past steps (including the current one) that reach an output.
  std::size_t receptive_field() const {
    std::size_t field = 1;
    for (const auto& b : blocks) field += (b.width() - 1) * b.dilation;
    return field;
  }

  std::size_t out_channels() const {
    if (blocks.empty()) throw ContractError("tcn has no blocks");
    return blocks.back().out_channels();
  }

  void validate() const {
    if (blocks.empty()) throw ContractError("tcn has no blocks");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      if (b.dilation != (std::size_t{1} << i)) {
        throw ContractError("tcn block " + std::to_string(i) + " has dilation " +
                            std::to_string(b.dilation) + ", expected " +
                            std::to_string(std::size_t{1} << i));
      }
      if (i > 0 && b.in_channels() != blocks[i - 1].out_channels()) {
        throw DimensionError("tcn block " + std::to_string(i) +
                             " input channels do not match previous block");
      }
    }
  }

  NamedTensors named_parameters() const {
    NamedTensors out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::string prefix = "block" + std::to_string(i) + ".";
      out.emplace_back(prefix + "kernel", blocks[i].kernel);
      out.emplace_back(prefix + "bias", blocks[i].bias);
      if (blocks[i].residual_kernel.defined()) {
        out.emplace_back(prefix + "residual_kernel", blocks[i].residual_kernel);
        out.emplace_back(prefix + "residual_bias", blocks[i].residual_bias);
      }
    }
    return out;
  }
};

// Each block: ReLU(causal dilated conv) plus the residual path (identity, or
// a 1x1 projection when channel counts differ).
inline Tensor tcn_forward(const TcnParams& params, const Tensor& seq) {
  if (params.blocks.empty()) throw ContractError("tcn_forward: no blocks");
  const std::size_t steps = seq.rank() >= 2 ? seq.shape()[seq.rank() - 2] : 0;
  if (steps == 0) throw ContractError("tcn_forward: empty sequence");
  Tensor x = seq;
  for (const auto& block : params.blocks) {
    Tensor y = relu(conv1d_dilated(x, block.kernel, block.dilation, block.bias));
    if (params.residual) {
      if (block.residual_kernel.defined()) {
        y = y + conv1d_dilated(x, block.residual_kernel, 1, block.residual_bias);
      } else if (block.in_channels() == block.out_channels()) {
        y = y + x;
      } else {
        throw DimensionError("tcn_forward: residual needs a projection");
      }
    }
    x = y;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Reduced temporal fusion model

struct TftLiteParams {
  // Per-feature value projection: value_j = value_w[j] * x_j + value_b[j].
  Tensor value_w;  // [F]
  Tensor value_b;  // [F]
  // Selection scores s = selection_w x + selection_b, weights = softmax(s).
  Tensor selection_w;  // [F x F]
  Tensor selection_b;  // [F]
  LstmParams encoder;
  AttentionParams attention;

  static TftLiteParams init(std::size_t features, std::size_t hidden, Rng& rng) {
    TftLiteParams p;
    // Uniform selection weights are 1/F at the start; a value scale of F
    // passes inputs through at unit size.
    p.value_w = Tensor::full({features}, static_cast<double>(features), true);
    p.value_b = Tensor::zeros({features}, true);
    p.selection_w = detail::uniform_init({features, features}, features, rng);
    p.selection_b = Tensor::zeros({features}, true);
    p.encoder = LstmParams::init(features, hidden, rng);
    p.attention = AttentionParams::init(hidden, hidden, rng);
    return p;
  }

  std::size_t feature_count() const { return value_w.numel(); }

  NamedTensors named_parameters() const {
    NamedTensors out = {{"value_w", value_w},
                        {"value_b", value_b},
                        {"selection_w", selection_w},
                        {"selection_b", selection_b}};
    for (auto& [name, t] : encoder.named_parameters()) {
      out.emplace_back("encoder." + name, t);
    }
    for (auto& [name, t] : attention.named_parameters()) {
      out.emplace_back("attention." + name, t);
    }
    return out;
  }
};

struct VariableSelection {
  Tensor values;   // [F] or [N x F]: weights[j] * (value_w[j] x_j + value_b[j])
  Tensor weights;  // same shape, each row non-negative and summing to one
};

inline VariableSelection tft_variable_select(const TftLiteParams& params,
                                             const Tensor& x_t) {
  const std::size_t features = params.feature_count();
  const bool vector_form = x_t.rank() == 1;
  if (x_t.shape().back() != features || x_t.rank() > 2) {
    throw DimensionError("tft_variable_select: expected " +
                         std::to_string(features) + " features, got " +
                         shape_str(x_t.shape()));
  }
  const Tensor x = vector_form ? reshape(x_t, {1, features}) : x_t;
  const Tensor weights =
      softmax(affine(x, params.selection_w, params.selection_b));
  const Tensor projected = (x * params.value_w) + params.value_b;
  const Tensor values = weights * projected;
  if (!vector_form) return {values, weights};
  return {reshape(values, {features}), reshape(weights, {features})};
}

// ---------------------------------------------------------------------------
// Classifier

inline constexpr std::size_t kNumClasses = 3;

struct Hyperparameters {
  std::size_t input_size = 0;
  std::size_t hidden_size = 32;
  std::size_t n_classes = kNumClasses;
  std::size_t tcn_channels = 16;
  std::size_t tcn_kernel = 3;
  std::size_t tcn_levels = 3;
};

struct Linear {
  Tensor weight;  // [n_classes x D]
  Tensor bias;    // [n_classes]
};

struct LstmModel {
  LstmParams encoder;
  AttentionParams attention;
};
struct TcnModel {
  TcnParams tcn;
};
struct TftModel {
  TftLiteParams tft;
};

struct SequenceClassifier {
  Arch arch = Arch::kLstm;
  Hyperparameters hyper;
  std::variant<LstmModel, TcnModel, TftModel> body;
  Linear head;

  static SequenceClassifier init(Arch arch, const Hyperparameters& hyper,
                                 std::uint64_t seed) {
    if (hyper.input_size == 0 || hyper.hidden_size == 0 || hyper.n_classes < 2) {
      throw ContractError("classifier needs input_size, hidden_size >= 1 and "
                          "at least 2 classes");
    }
    Rng rng(seed);
    SequenceClassifier model;
    model.arch = arch;
    model.hyper = hyper;
    std::size_t feature_dim = hyper.hidden_size;
    switch (arch) {
      case Arch::kLstm: {
        LstmModel m{LstmParams::init(hyper.input_size, hyper.hidden_size, rng),
                    AttentionParams::init(hyper.hidden_size, hyper.hidden_size,
                                          rng)};
        model.body = std::move(m);
        break;
      }
      case Arch::kTcn:
        model.body = TcnModel{TcnParams::init(hyper.input_size, hyper.tcn_channels,
                                              hyper.tcn_kernel, hyper.tcn_levels,
                                              rng)};
        feature_dim = hyper.tcn_channels;
        break;
      case Arch::kTft:
        model.body =
            TftModel{TftLiteParams::init(hyper.input_size, hyper.hidden_size, rng)};
        break;
    }
    model.head.weight =
        detail::uniform_init({hyper.n_classes, feature_dim}, feature_dim, rng);
    model.head.bias = Tensor::zeros({hyper.n_classes}, true);
    return model;
  }

  // Stable, unique names in a fixed order; used for optimizers and files.
  NamedTensors named_parameters() const {
    NamedTensors out;
    auto append = [&out](const std::string& prefix, const NamedTensors& items) {
      for (const auto& [name, t] : items) out.emplace_back(prefix + name, t);
    };
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, LstmModel>) {
            append("lstm.", m.encoder.named_parameters());
            append("attention.", m.attention.named_parameters());
          } else if constexpr (std::is_same_v<T, TcnModel>) {
            append("tcn.", m.tcn.named_parameters());
          } else {
            append("tft.", m.tft.named_parameters());
          }
        },
        body);
    out.emplace_back("head.weight", head.weight);
    out.emplace_back("head.bias", head.bias);
    return out;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Tensor& t : parameters()) n += t.numel();
    return n;
  }

  // Deep copy: the clone shares no storage with this model.
  SequenceClassifier clone() const {
    SequenceClassifier copy = *this;
    auto fresh = [](Tensor& t) {
      if (t.defined()) t = t.clone();
    };
    std::visit(
        [&](auto& m) {
          using T = std::decay_t<decltype(m)>;
          auto lstm = [&](LstmParams& p) {
            for (Tensor* t : {&p.input_gate_w, &p.forget_gate_w, &p.output_gate_w,
                              &p.candidate_w, &p.input_gate_b, &p.forget_gate_b,
                              &p.output_gate_b, &p.candidate_b}) {
              fresh(*t);
            }
          };
          auto attn = [&](AttentionParams& p) {
            for (Tensor* t : {&p.align_w, &p.align_b, &p.score_w, &p.score_b}) {
              fresh(*t);
            }
          };
          if constexpr (std::is_same_v<T, LstmModel>) {
            lstm(m.encoder);
            attn(m.attention);
          } else if constexpr (std::is_same_v<T, TcnModel>) {
            for (auto& b : m.tcn.blocks) {
              fresh(b.kernel);
              fresh(b.bias);
              fresh(b.residual_kernel);
              fresh(b.residual_bias);
            }
          } else {
            for (Tensor* t : {&m.tft.value_w, &m.tft.value_b, &m.tft.selection_w,
                              &m.tft.selection_b}) {
              fresh(*t);
            }
            lstm(m.tft.encoder);
            attn(m.tft.attention);
          }
        },
        copy.body);
    fresh(copy.head.weight);
    fresh(copy.head.bias);
    return copy;
  }

  std::size_t input_size() const { return hyper.input_size; }
};

struct ClassifierOutput {
  Tensor logits;                            // [B x C]
  Tensor probs;                             // [B x C]
  Tensor hidden_states;                     // [B x T x D]
  std::optional<Tensor> attention_scores;   // [B x T]   (LSTM, TFT)
  std::optional<Tensor> selection_weights;  // [B x T x F] (TFT)
};

// Batched forward over [B x T x F] (or one [T x F] sequence, reported as B=1).
inline ClassifierOutput classifier_forward(const SequenceClassifier& model,
                                           const Tensor& seq) {
  const Tensor x = detail::as_batch(seq, "classifier_forward");
  const std::size_t batch = x.shape()[0], steps = x.shape()[1],
                    width = x.shape()[2];
  if (width != model.input_size()) {
    throw SchemaError("model expects " + std::to_string(model.input_size()) +
                      " encoded features per time step, got " +
                      std::to_string(width));
  }
  if (steps == 0) throw ContractError("classifier_forward: empty sequence");
  ClassifierOutput out;
  Tensor features;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LstmModel>) {
          out.hidden_states = lstm_forward(m.encoder, x);
          AttentionOutput attn = attention_forward(m.attention, out.hidden_states);
          out.attention_scores = attn.scores;
          features = attn.context;
        } else if constexpr (std::is_same_v<T, TcnModel>) {
          out.hidden_states = tcn_forward(m.tcn, x);
          features = time_step(out.hidden_states, steps - 1);
        } else {
          const Tensor flat = reshape(x, {batch * steps, width});
          VariableSelection sel = tft_variable_select(m.tft, flat);
          out.selection_weights = reshape(sel.weights, {batch, steps, width});
          const Tensor selected = reshape(sel.values, {batch, steps, width});
          out.hidden_states = lstm_forward(m.tft.encoder, selected);
          AttentionOutput attn =
              attention_forward(m.tft.attention, out.hidden_states);
          out.attention_scores = attn.scores;
          features = attn.context;
        }
      },
      model.body);
  out.logits = affine(features, model.head.weight, model.head.bias);
  out.probs = softmax(out.logits);
  return out;
}

}  // namespace sleepx

#endif  // SLEEPX_MODELS_HPP_
