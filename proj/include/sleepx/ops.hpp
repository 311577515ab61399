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

// Differentiable operations on Tensor. Matrices are row-major [rows x cols];
// batched sequences are [batch x time x features].

#ifndef SLEEPX_OPS_HPP_
#define SLEEPX_OPS_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sleepx/error.hpp"
#include "sleepx/tensor.hpp"

namespace sleepx {

enum class Activation { kSigmoid, kTanh, kRelu };

namespace detail {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

inline ConstMatrixMap as_matrix(const std::vector<double>& v, std::size_t rows,
                                std::size_t cols) {
  return ConstMatrixMap(v.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}

inline MatrixMap as_matrix(std::vector<double>& v, std::size_t rows,
                           std::size_t cols) {
  return MatrixMap(v.data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

inline Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

// How the right operand of a binary op maps onto the left operand's layout.
enum class Broadcast { kSame, kScalar, kRow, kColumn };

inline Broadcast broadcast_mode(const Tensor& a, const Tensor& b,
                                const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.numel() == 1) return Broadcast::kScalar;
  if (a.rank() == 2) {
    const std::size_t rows = a.shape()[0], cols = a.shape()[1];
    if ((b.rank() == 1 && b.shape()[0] == cols) ||
        (b.rank() == 2 && b.shape()[0] == 1 && b.shape()[1] == cols)) {
      return Broadcast::kRow;
    }
    if (b.rank() == 2 && b.shape()[0] == rows && b.shape()[1] == 1) {
      return Broadcast::kColumn;
    }
  }
  throw DimensionError(std::string(op) + ": cannot broadcast " +
                       shape_str(b.shape()) + " onto " + shape_str(a.shape()));
}

inline std::size_t broadcast_index(Broadcast mode, std::size_t i,
                                   std::size_t cols) {
  switch (mode) {
    case Broadcast::kSame:
      return i;
    case Broadcast::kScalar:
      return 0;
    case Broadcast::kRow:
      return i % cols;
    case Broadcast::kColumn:
      return i / cols;
  }
  return 0;
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic with broadcasting of the right operand: same shape,
// scalar, row vector [N] / [1xN] over [MxN], or column [Mx1] over [MxN].

inline Tensor add(const Tensor& a, const Tensor& b) {
  const auto mode = detail::broadcast_mode(a, b, "add");
  const std::size_t cols = a.rank() == 2 ? a.shape()[1] : 1;
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += bv[detail::broadcast_index(mode, i, cols)];
  }
  return detail::make_result(a.shape(), std::move(out), {&a, &b},
                             [mode, cols](detail::Node& self) {
    auto& pa = detail::parent(self, 0);
    auto& pb = detail::parent(self, 1);
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        gb[detail::broadcast_index(mode, i, cols)] += self.grad[i];
      }
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  const auto mode = detail::broadcast_mode(a, b, "sub");
  const std::size_t cols = a.rank() == 2 ? a.shape()[1] : 1;
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] -= bv[detail::broadcast_index(mode, i, cols)];
  }
  return detail::make_result(a.shape(), std::move(out), {&a, &b},
                             [mode, cols](detail::Node& self) {
    auto& pa = detail::parent(self, 0);
    auto& pb = detail::parent(self, 1);
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        gb[detail::broadcast_index(mode, i, cols)] -= self.grad[i];
      }
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  const auto mode = detail::broadcast_mode(a, b, "mul");
  const std::size_t cols = a.rank() == 2 ? a.shape()[1] : 1;
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] *= bv[detail::broadcast_index(mode, i, cols)];
  }
  return detail::make_result(a.shape(), std::move(out), {&a, &b},
                             [mode, cols](detail::Node& self) {
    auto& pa = detail::parent(self, 0);
    auto& pb = detail::parent(self, 1);
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) {
        ga[i] += self.grad[i] * pb.data[detail::broadcast_index(mode, i, cols)];
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        gb[detail::broadcast_index(mode, i, cols)] += self.grad[i] * pa.data[i];
      }
    }
  });
}

inline Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.values());
  for (double& v : out) v *= factor;
  return detail::make_result(a.shape(), std::move(out), {&a},
                             [factor](detail::Node& self) {
    auto& ga = detail::parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * self.grad[i];
  });
}

// a + constant, elementwise.
inline Tensor shift(const Tensor& a, double offset) {
  std::vector<double> out(a.values());
  for (double& v : out) v += offset;
  return detail::make_result(a.shape(), std::move(out), {&a},
                             [](detail::Node& self) {
    auto& ga = detail::parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator-(const Tensor& a) { return scale(a, -1.0); }

// ---------------------------------------------------------------------------
// Linear algebra.

// [m x k] . [k x n] -> [m x n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_rank(a, 2, "matmul");
  detail::require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions differ for " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  std::vector<double> out(m * n);
  detail::as_matrix(out, m, n).noalias() =
      detail::as_matrix(a.values(), m, k) * detail::as_matrix(b.values(), k, n);
  return detail::make_result({m, n}, std::move(out), {&a, &b},
                             [m, k, n](detail::Node& self) {
    auto& pa = detail::parent(self, 0);
    auto& pb = detail::parent(self, 1);
    const auto g = detail::as_matrix(self.grad, m, n);
    if (pa.requires_grad) {
      detail::as_matrix(pa.ensure_grad(), m, k).noalias() +=
          g * detail::as_matrix(pb.data, k, n).transpose();
    }
    if (pb.requires_grad) {
      detail::as_matrix(pb.ensure_grad(), k, n).noalias() +=
          detail::as_matrix(pa.data, m, k).transpose() * g;
    }
  });
}

inline Tensor transpose(const Tensor& a) {
  detail::require_rank(a, 2, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  detail::as_matrix(out, n, m) = detail::as_matrix(a.values(), m, n).transpose();
  return detail::make_result({n, m}, std::move(out), {&a},
                             [m, n](detail::Node& self) {
    detail::as_matrix(detail::parent(self, 0).ensure_grad(), m, n) +=
        detail::as_matrix(self.grad, n, m).transpose();
  });
}

// x . W^T + b for x [batch x in], W [out x in], b [out]. `bias` may be an
// undefined tensor for a bias-free projection.
inline Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  detail::require_rank(x, 2, "affine");
  detail::require_rank(weight, 2, "affine");
  const std::size_t batch = x.shape()[0], in = x.shape()[1];
  const std::size_t out_dim = weight.shape()[0];
  if (weight.shape()[1] != in) {
    throw DimensionError("affine: input " + shape_str(x.shape()) +
                         " does not match weight " + shape_str(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && bias.numel() != out_dim) {
    throw DimensionError("affine: bias " + shape_str(bias.shape()) +
                         " does not match weight " + shape_str(weight.shape()));
  }
  std::vector<double> out(batch * out_dim);
  auto out_map = detail::as_matrix(out, batch, out_dim);
  out_map.noalias() = detail::as_matrix(x.values(), batch, in) *
                      detail::as_matrix(weight.values(), out_dim, in).transpose();
  if (has_bias) {
    const auto b = detail::as_matrix(bias.values(), 1, out_dim);
    out_map.rowwise() += b.row(0);
  }
  auto backward_fn = [batch, in, out_dim, has_bias](detail::Node& self) {
    auto& px = detail::parent(self, 0);
    auto& pw = detail::parent(self, 1);
    const auto g = detail::as_matrix(self.grad, batch, out_dim);
    if (px.requires_grad) {
      detail::as_matrix(px.ensure_grad(), batch, in).noalias() +=
          g * detail::as_matrix(pw.data, out_dim, in);
    }
    if (pw.requires_grad) {
      detail::as_matrix(pw.ensure_grad(), out_dim, in).noalias() +=
          g.transpose() * detail::as_matrix(px.data, batch, in);
    }
    if (has_bias) {
      auto& pb = detail::parent(self, 2);
      if (pb.requires_grad) {
        detail::as_matrix(pb.ensure_grad(), 1, out_dim) += g.colwise().sum();
      }
    }
  };
  if (has_bias) {
    return detail::make_result({batch, out_dim}, std::move(out),
                               {&x, &weight, &bias}, backward_fn);
  }
  return detail::make_result({batch, out_dim}, std::move(out), {&x, &weight},
                             backward_fn);
}

// ---------------------------------------------------------------------------
// Nonlinearities.

inline Tensor activation(const Tensor& x, Activation kind) {
  std::vector<double> out(x.values());
  switch (kind) {
    case Activation::kSigmoid:
      for (double& v : out) v = detail::stable_sigmoid(v);
      break;
    case Activation::kTanh:
      for (double& v : out) v = std::tanh(v);
      break;
    case Activation::kRelu:
      for (double& v : out) v = v > 0.0 ? v : 0.0;
      break;
  }
  return detail::make_result(x.shape(), std::move(out), {&x},
                             [kind](detail::Node& self) {
    auto& px = detail::parent(self, 0);
    auto& gx = px.ensure_grad();
    const auto& y = self.data;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      double local = 0.0;
      switch (kind) {
        case Activation::kSigmoid:
          local = y[i] * (1.0 - y[i]);
          break;
        case Activation::kTanh:
          local = 1.0 - y[i] * y[i];
          break;
        case Activation::kRelu:
          local = px.data[i] > 0.0 ? 1.0 : 0.0;
          break;
      }
      gx[i] += local * self.grad[i];
    }
  });
}

inline Tensor sigmoid(const Tensor& x) {
  return activation(x, Activation::kSigmoid);
}
inline Tensor tanh(const Tensor& x) { return activation(x, Activation::kTanh); }
inline Tensor relu(const Tensor& x) { return activation(x, Activation::kRelu); }

// Softmax of a vector [n], or of each row of a matrix [m x n]. Max-shifted.
inline Tensor softmax(const Tensor& x) {
  if (x.rank() != 1 && x.rank() != 2) {
    throw DimensionError("softmax: expected a vector or matrix, got " +
                         shape_str(x.shape()));
  }
  const std::size_t cols = x.shape().back();
  if (cols == 0) throw DimensionError("softmax: empty input");
  const std::size_t rows = x.numel() / cols;
  std::vector<double> out(x.numel());
  const auto& in = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * cols;
    double* dst = out.data() + r * cols;
    const double peak = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      dst[c] = std::exp(row[c] - peak);
      total += dst[c];
    }
    for (std::size_t c = 0; c < cols; ++c) dst[c] /= total;
  }
  return detail::make_result(x.shape(), std::move(out), {&x},
                             [rows, cols](detail::Node& self) {
    auto& gx = detail::parent(self, 0).ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.data.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[c] * y[c];
      for (std::size_t c = 0; c < cols; ++c) {
        gx[r * cols + c] += y[c] * (g[c] - dot);
      }
    }
  });
}

// Mean over the batch of -log softmax(logits[b])[targets[b]].
// logits is [n_classes] (one target) or [batch x n_classes].
inline Tensor cross_entropy(const Tensor& logits,
                            std::span<const std::size_t> targets) {
  if (logits.rank() != 1 && logits.rank() != 2) {
    throw DimensionError("cross_entropy: expected logits vector or matrix, got " +
                         shape_str(logits.shape()));
  }
  const std::size_t classes = logits.shape().back();
  const std::size_t batch = logits.numel() / classes;
  if (targets.size() != batch) {
    throw DimensionError("cross_entropy: " + std::to_string(batch) +
                         " rows but " + std::to_string(targets.size()) +
                         " targets");
  }
  for (std::size_t t : targets) {
    if (t >= classes) {
      throw IndexError("cross_entropy: target " + std::to_string(t) +
                       " outside [0, " + std::to_string(classes) + ")");
    }
  }
  std::vector<double> probs(logits.numel());
  double loss = 0.0;
  const auto& in = logits.values();
  for (std::size_t r = 0; r < batch; ++r) {
    const double* row = in.data() + r * classes;
    const double peak = *std::max_element(row, row + classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += std::exp(row[c] - peak);
    const double log_total = std::log(total);
    for (std::size_t c = 0; c < classes; ++c) {
      probs[r * classes + c] = std::exp(row[c] - peak - log_total);
    }
    loss += log_total + peak - row[targets[r]];
  }
  loss /= static_cast<double>(batch);
  std::vector<std::size_t> labels(targets.begin(), targets.end());
  return detail::make_result({}, {loss}, {&logits},
                             [probs = std::move(probs), labels = std::move(labels),
                              classes, batch](detail::Node& self) {
    auto& gx = detail::parent(self, 0).ensure_grad();
    const double g = self.grad[0] / static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t c = 0; c < classes; ++c) {
        const double onehot = c == labels[r] ? 1.0 : 0.0;
        gx[r * classes + c] += g * (probs[r * classes + c] - onehot);
      }
    }
  });
}

inline Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  const std::size_t targets[] = {target};
  return cross_entropy(logits, std::span<const std::size_t>(targets));
}

// ---------------------------------------------------------------------------
// Reductions.

inline Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return detail::make_result({}, {total}, {&x}, [](detail::Node& self) {
    auto& gx = detail::parent(self, 0).ensure_grad();
    for (double& g : gx) g += self.grad[0];
  });
}

inline Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

// Single element by flat index, as a scalar.
inline Tensor pick(const Tensor& x, std::size_t index) {
  if (index >= x.numel()) {
    throw IndexError("pick: index " + std::to_string(index) +
                     " out of range for " + shape_str(x.shape()));
  }
  return detail::make_result({}, {x.values()[index]}, {&x},
                             [index](detail::Node& self) {
    detail::parent(self, 0).ensure_grad()[index] += self.grad[0];
  });
}

// ---------------------------------------------------------------------------
// Shape manipulation.

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) +
                         " as " + shape_str(shape));
  }
  return detail::make_result(std::move(shape), x.values(), {&x},
                             [](detail::Node& self) {
    auto& gx = detail::parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

// Horizontal concatenation of matrices sharing a row count.
inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rank() == 2 ? parts[0].shape()[0] : 0;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    detail::require_rank(p, 2, "concat_cols");
    if (p.shape()[0] != rows) {
      throw DimensionError("concat_cols: row counts differ (" +
                           shape_str(parts[0].shape()) + " vs " +
                           shape_str(p.shape()) + ")");
    }
    widths.push_back(p.shape()[1]);
    total += p.shape()[1];
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& src = parts[k].values();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src.data() + r * widths[k], widths[k],
                  out.data() + r * total + offset);
    }
    offset += widths[k];
  }
  return detail::make_result({rows, total}, std::move(out), parts,
                             [rows, total, widths](detail::Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      auto& p = detail::parent(self, k);
      if (p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < widths[k]; ++c) {
            g[r * widths[k] + c] += self.grad[r * total + offset + c];
          }
        }
      }
      offset += widths[k];
    }
  });
}

// Columns [start, start + count) of a matrix.
inline Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  detail::require_rank(x, 2, "slice_cols");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (start + count > cols) {
    throw IndexError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " +
                     shape_str(x.shape()));
  }
  std::vector<double> out(rows * count);
  const auto& in = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(in.data() + r * cols + start, count, out.data() + r * count);
  }
  return detail::make_result({rows, count}, std::move(out), {&x},
                             [rows, cols, start, count](detail::Node& self) {
    auto& gx = detail::parent(self, 0).ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < count; ++c) {
        gx[r * cols + start + c] += self.grad[r * count + c];
      }
    }
  });
}

// Time step t of a batch [B x T x F], as [B x F].
inline Tensor time_step(const Tensor& x, std::size_t t) {
  detail::require_rank(x, 3, "time_step");
  const std::size_t batch = x.shape()[0], steps = x.shape()[1],
                    width = x.shape()[2];
  if (t >= steps) {
    throw IndexError("time_step: t=" + std::to_string(t) + " outside " +
                     shape_str(x.shape()));
  }
  std::vector<double> out(batch * width);
  const auto& in = x.values();
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(in.data() + (b * steps + t) * width, width,
                out.data() + b * width);
  }
  return detail::make_result({batch, width}, std::move(out), {&x},
                             [batch, steps, width, t](detail::Node& self) {
    auto& gx = detail::parent(self, 0).ensure_grad();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t f = 0; f < width; ++f) {
        gx[(b * steps + t) * width + f] += self.grad[b * width + f];
      }
    }
  });
}

// Stacks T matrices [B x F] into [B x T x F].
inline Tensor stack_time(const std::vector<Tensor>& steps) {
  if (steps.empty()) throw ContractError("stack_time: no time steps");
  detail::require_rank(steps[0], 2, "stack_time");
  const std::size_t batch = steps[0].shape()[0], width = steps[0].shape()[1];
  const std::size_t count = steps.size();
  std::vector<double> out(batch * count * width);
  for (std::size_t t = 0; t < count; ++t) {
    if (steps[t].shape() != steps[0].shape()) {
      throw DimensionError("stack_time: step shapes differ");
    }
    const auto& src = steps[t].values();
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(src.data() + b * width, width,
                  out.data() + (b * count + t) * width);
    }
  }
  return detail::make_result({batch, count, width}, std::move(out), steps,
                             [batch, count, width](detail::Node& self) {
    for (std::size_t t = 0; t < count; ++t) {
      auto& p = detail::parent(self, t);
      if (!p.requires_grad) continue;
      auto& g = p.ensure_grad();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t f = 0; f < width; ++f) {
          g[b * width + f] += self.grad[(b * count + t) * width + f];
        }
      }
    }
  });
}

// Per-row weighted sum over time: out[b] = sum_t weights[b, t] * x[b, t, :].
// weights is [B x T], x is [B x T x F]; result is [B x F].
inline Tensor weighted_time_sum(const Tensor& weights, const Tensor& x) {
  detail::require_rank(weights, 2, "weighted_time_sum");
  detail::require_rank(x, 3, "weighted_time_sum");
  const std::size_t batch = x.shape()[0], steps = x.shape()[1],
                    width = x.shape()[2];
  if (weights.shape()[0] != batch || weights.shape()[1] != steps) {
    throw DimensionError("weighted_time_sum: weights " +
                         shape_str(weights.shape()) + " do not match " +
                         shape_str(x.shape()));
  }
  std::vector<double> out(batch * width, 0.0);
  const auto& wv = weights.values();
  const auto& xv = x.values();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const double a = wv[b * steps + t];
      const double* row = xv.data() + (b * steps + t) * width;
      for (std::size_t f = 0; f < width; ++f) out[b * width + f] += a * row[f];
    }
  }
  return detail::make_result({batch, width}, std::move(out), {&weights, &x},
                             [batch, steps, width](detail::Node& self) {
    auto& pw = detail::parent(self, 0);
    auto& px = detail::parent(self, 1);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* g = self.grad.data() + b * width;
      for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t row = (b * steps + t) * width;
        if (pw.requires_grad) {
          double dot = 0.0;
          for (std::size_t f = 0; f < width; ++f) dot += g[f] * px.data[row + f];
          pw.ensure_grad()[b * steps + t] += dot;
        }
        if (px.requires_grad) {
          auto& gx = px.ensure_grad();
          const double a = pw.data[b * steps + t];
          for (std::size_t f = 0; f < width; ++f) gx[row + f] += a * g[f];
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Causal dilated convolution.
//
// x is [T x C_in] or [B x T x C_in]; weight is [k x C_in x C_out]; bias is
// [C_out]. Tap j reads x[t - (k-1-j)*dilation], with zeros before t=0, so
// output[t] depends on x[0..t] only and keeps the input length.
inline Tensor conv1d_dilated(const Tensor& x, const Tensor& weight,
                             std::size_t dilation, const Tensor& bias) {
  if (dilation < 1) throw ContractError("conv1d_dilated: dilation must be >= 1");
  if (x.rank() != 2 && x.rank() != 3) {
    throw DimensionError("conv1d_dilated: input must be [T x C] or [B x T x C], "
                         "got " + shape_str(x.shape()));
  }
  detail::require_rank(weight, 3, "conv1d_dilated");
  const bool batched = x.rank() == 3;
  const std::size_t batch = batched ? x.shape()[0] : 1;
  const std::size_t steps = x.shape()[batched ? 1 : 0];
  const std::size_t c_in = x.shape().back();
  const std::size_t k = weight.shape()[0];
  const std::size_t c_out = weight.shape()[2];
  if (k < 1) throw ContractError("conv1d_dilated: kernel width must be >= 1");
  if (weight.shape()[1] != c_in) {
    throw DimensionError("conv1d_dilated: input has " + std::to_string(c_in) +
                         " channels but kernel " + shape_str(weight.shape()) +
                         " expects " + std::to_string(weight.shape()[1]));
  }
  if (bias.numel() != c_out) {
    throw DimensionError("conv1d_dilated: bias " + shape_str(bias.shape()) +
                         " does not match " + std::to_string(c_out) +
                         " output channels");
  }
  std::vector<double> out(batch * steps * c_out);
  const auto& xv = x.values();
  const auto& wv = weight.values();
  const auto& bv = bias.values();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      double* dst = out.data() + (b * steps + t) * c_out;
      std::copy_n(bv.data(), c_out, dst);
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t lag = (k - 1 - j) * dilation;
        if (lag > t) continue;
        const double* src = xv.data() + (b * steps + t - lag) * c_in;
        const double* w = wv.data() + j * c_in * c_out;
        for (std::size_t i = 0; i < c_in; ++i) {
          const double xi = src[i];
          for (std::size_t o = 0; o < c_out; ++o) dst[o] += xi * w[i * c_out + o];
        }
      }
    }
  }
  Shape shape = batched ? Shape{batch, steps, c_out} : Shape{steps, c_out};
  return detail::make_result(std::move(shape), std::move(out),
                             {&x, &weight, &bias},
                             [=](detail::Node& self) {
    auto& px = detail::parent(self, 0);
    auto& pw = detail::parent(self, 1);
    auto& pb = detail::parent(self, 2);
    const auto& g = self.grad;
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t r = 0; r < batch * steps; ++r) {
        for (std::size_t o = 0; o < c_out; ++o) gb[o] += g[r * c_out + o];
      }
    }
    std::vector<double>* gx = px.requires_grad ? &px.ensure_grad() : nullptr;
    std::vector<double>* gw = pw.requires_grad ? &pw.ensure_grad() : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < steps; ++t) {
        const double* gt = g.data() + (b * steps + t) * c_out;
        for (std::size_t j = 0; j < k; ++j) {
          const std::size_t lag = (k - 1 - j) * dilation;
          if (lag > t) continue;
          const std::size_t src = (b * steps + t - lag) * c_in;
          const std::size_t w0 = j * c_in * c_out;
          for (std::size_t i = 0; i < c_in; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < c_out; ++o) {
              acc += gt[o] * pw.data[w0 + i * c_out + o];
              if (gw) (*gw)[w0 + i * c_out + o] += gt[o] * px.data[src + i];
            }
            if (gx) (*gx)[src + i] += acc;
          }
        }
      }
    }
  });
}

}  // namespace sleepx

#endif  // SLEEPX_OPS_HPP_
