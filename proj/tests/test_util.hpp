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

// Shared helpers for the test suites. The finite-difference checker is the
// independent oracle for every autodiff gradient: it only calls the forward
// function and never looks at the recorded graph.

#ifndef SLEEPX_TESTS_TEST_UTIL_HPP_
#define SLEEPX_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sleepx/ops.hpp"
#include "sleepx/random.hpp"
#include "sleepx/tensor.hpp"

namespace sleepx::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0, bool requires_grad = false) {
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is zero (e.g. a softmax-invariant bias) from dividing round-off
// noise by zero.
inline double relative_error(double analytic, double numeric,
                             double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

struct GradientReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

// Compares autodiff gradients of the scalar `loss` with central differences
// for every element of every tensor in `params`.
inline GradientReport check_gradients(const std::function<Tensor()>& loss,
                                      std::vector<Tensor> params,
                                      double h = 1e-5) {
  for (Tensor& p : params) p.zero_grad();
  backward(loss());
  std::vector<std::vector<double>> analytic;
  for (const Tensor& p : params) analytic.push_back(p.grad());

  GradientReport report;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss().item();
      data[i] = saved - h;
      const double down = loss().item();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[k][i], numeric);
      ++report.checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst = "param " + std::to_string(k) + "[" + std::to_string(i) +
                       "] analytic=" + std::to_string(analytic[k][i]) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return report;
}

}  // namespace sleepx::testing

#endif  // SLEEPX_TESTS_TEST_UTIL_HPP_
