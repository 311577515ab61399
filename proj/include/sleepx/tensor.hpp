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

// Dense row-major tensors of binary64 values with define-by-run reverse-mode
// differentiation. Every op in ops.hpp produces a fresh node; when any input
// requires a gradient (and recording is enabled) the node keeps links to its
// parents plus a closure that pushes its output gradient back to them.

#ifndef SLEEPX_TENSOR_HPP_
#define SLEEPX_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sleepx/error.hpp"

namespace sleepx {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  // Empty until a backward pass reaches this node.
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return parents.empty(); }

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }

  ~Node() {
    // Unlink long parent chains iteratively so deep recurrent graphs do not
    // exhaust the stack on destruction.
    std::vector<std::shared_ptr<Node>> pending = std::move(parents);
    while (!pending.empty()) {
      std::shared_ptr<Node> next = std::move(pending.back());
      pending.pop_back();
      if (next && next.use_count() == 1) {
        for (auto& p : next->parents) pending.push_back(std::move(p));
        next->parents.clear();
        next->backward_fn = nullptr;
      }
    }
  }
};

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

// Whether ops on the current thread record a graph.
inline bool grad_enabled() { return detail::grad_mode_flag(); }

// RAII scope that disables graph recording on the current thread.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_flag()) {
    detail::grad_mode_flag() = false;
  }
  ~NoGradGuard() { detail::grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false)
      : node_(std::make_shared<detail::Node>()) {
    if (shape_numel(shape) != data.size()) {
      throw DimensionError("tensor shape " + shape_str(shape) + " needs " +
                           std::to_string(shape_numel(shape)) +
                           " values, got " + std::to_string(data.size()));
    }
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor full(Shape shape, double value, bool requires_grad = false) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value),
                  requires_grad);
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return Tensor({}, {value}, requires_grad);
  }

  static Tensor vector(std::vector<double> values, bool requires_grad = false) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values), requires_grad);
  }

  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values, bool requires_grad = false) {
    return Tensor({rows, cols}, std::move(values), requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node().shape; }
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const {
    if (axis >= rank()) {
      throw IndexError("axis " + std::to_string(axis) + " out of range for " +
                       shape_str(shape()));
    }
    return shape()[axis];
  }
  std::size_t numel() const { return node().data.size(); }

  std::span<const double> data() const { return node().data; }
  // Direct write access; only meaningful on leaves (parameters, inputs).
  std::span<double> mutable_data() { return node().data; }
  const std::vector<double>& values() const { return node().data; }

  double item() const {
    if (numel() != 1) {
      throw DimensionError("item() on tensor of shape " + shape_str(shape()));
    }
    return node().data[0];
  }
  double operator[](std::size_t i) const { return node().data.at(i); }
  double at(std::size_t r, std::size_t c) const {
    if (rank() != 2) throw DimensionError("at(r, c) needs a matrix");
    return node().data.at(r * shape()[1] + c);
  }

  bool requires_grad() const { return node().requires_grad; }
  Tensor& set_requires_grad(bool value) {
    node().requires_grad = value;
    return *this;
  }

  bool has_grad() const { return !node().grad.empty(); }
  // Gradient of the last backward pass; zeros if none reached this tensor.
  std::vector<double> grad() const {
    if (node().grad.empty()) return std::vector<double>(numel(), 0.0);
    return node().grad;
  }
  void zero_grad() { node().grad.clear(); }

  // Same values, no graph history, no gradient requirement.
  Tensor detach() const { return Tensor(shape(), node().data, false); }
  // Deep copy of values keeping the requires_grad flag; gradients dropped.
  Tensor clone() const { return Tensor(shape(), node().data, requires_grad()); }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node>& handle() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  detail::Node& node() const {
    if (!node_) throw ContractError("use of an undefined tensor");
    return *node_;
  }

  std::shared_ptr<detail::Node> node_;
};

namespace detail {

// Builds the result node of an op. Parents are only linked when recording is
// on and at least one input needs a gradient.
inline Tensor make_result(Shape shape, std::vector<double> data,
                          std::initializer_list<const Tensor*> inputs,
                          std::function<void(Node&)> backward_fn) {
  Tensor out(std::move(shape), std::move(data));
  if (!grad_enabled()) return out;
  bool any = false;
  for (const Tensor* in : inputs) any = any || in->requires_grad();
  if (!any) return out;
  auto& node = *out.handle();
  node.requires_grad = true;
  for (const Tensor* in : inputs) node.parents.push_back(in->handle());
  node.backward_fn = std::move(backward_fn);
  return out;
}

inline Tensor make_result(Shape shape, std::vector<double> data,
                          const std::vector<Tensor>& inputs,
                          std::function<void(Node&)> backward_fn) {
  Tensor out(std::move(shape), std::move(data));
  if (!grad_enabled()) return out;
  bool any = false;
  for (const Tensor& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  auto& node = *out.handle();
  node.requires_grad = true;
  for (const Tensor& in : inputs) node.parents.push_back(in.handle());
  node.backward_fn = std::move(backward_fn);
  return out;
}

}  // namespace detail

// Reverse sweep from a scalar root. Leaf gradients accumulate across calls;
// interior gradients are reset at the start of every sweep, so calling twice
// without zero_grad() doubles the leaf gradients.
inline void backward(const Tensor& root) {
  if (root.numel() != 1) {
    throw ContractError("backward() needs a scalar root, got shape " +
                        shape_str(root.shape()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.handle().get(), 0);
  visited.insert(root.handle().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->data.size(), 0.0);
  }
  root.handle()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

}  // namespace sleepx

#endif  // SLEEPX_TENSOR_HPP_
