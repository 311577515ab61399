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

// Shapley attributions over sequence inputs. A player is a set of encoded
// cells (time step, column range); a coalition keeps the instance's cells for
// its players and takes every other cell from a background sequence. The
// value of a coalition is the model output averaged over the background
// (interventional masking).

#ifndef SLEEPX_SHAPLEY_HPP_
#define SLEEPX_SHAPLEY_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sleepx/error.hpp"
#include "sleepx/random.hpp"
#include "sleepx/tensor.hpp"

namespace sleepx {

// Maps a batch [N x T x W] to one output per row.
using BatchModel = std::function<std::vector<double>(const Tensor&)>;

struct CellRange {
  std::size_t timestep = 0;
  std::size_t begin = 0;  // first column
  std::size_t end = 0;    // one past the last column
};

struct Player {
  std::string name;
  std::vector<CellRange> cells;
};

using Coalition = std::vector<std::uint8_t>;  // membership flag per player

// Encoded column range [begin, end) attributed as one feature.
struct FeatureBlock {
  std::string name;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// One player per block, spanning every time step.
inline std::vector<Player> block_players(std::size_t steps,
                                         const std::vector<FeatureBlock>& blocks) {
  std::vector<Player> players;
  for (const FeatureBlock& b : blocks) {
    Player p{b.name, {}};
    for (std::size_t t = 0; t < steps; ++t) p.cells.push_back({t, b.begin, b.end});
    players.push_back(std::move(p));
  }
  return players;
}

// One player per (time step, block), time-major.
inline std::vector<Player> cell_players(std::size_t steps,
                                        const std::vector<FeatureBlock>& blocks) {
  std::vector<Player> players;
  for (std::size_t t = 0; t < steps; ++t) {
    for (const FeatureBlock& b : blocks) {
      players.push_back({b.name + "@" + std::to_string(t), {{t, b.begin, b.end}}});
    }
  }
  return players;
}

// Single-column blocks named c0, c1, ...
inline std::vector<FeatureBlock> column_blocks(std::size_t width) {
  std::vector<FeatureBlock> out;
  for (std::size_t c = 0; c < width; ++c) out.push_back({"c" + std::to_string(c), c, c + 1});
  return out;
}

class CoalitionEvaluator {
 public:
  static constexpr std::size_t kChunkRows = 4096;

  // `instance` is [T x W]; each background entry is [T_b x W]. Background
  // sequences are right-aligned to T: longer ones keep their last T steps,
  // shorter ones repeat their first step at the front.
  CoalitionEvaluator(BatchModel model, const Tensor& instance,
                     const std::vector<Tensor>& background, std::vector<Player> players)
      : model_(std::move(model)), players_(std::move(players)) {
    if (instance.rank() != 2) {
      throw DimensionError("shap: instance must be [T x W], got " + shape_str(instance.shape()));
    }
    if (background.empty()) throw ContractError("shap: background must be non-empty");
    steps_ = instance.shape()[0];
    width_ = instance.shape()[1];
    instance_ = instance.values();
    for (const Tensor& b : background) {
      if (b.rank() != 2 || b.shape()[1] != width_ || b.shape()[0] == 0) {
        throw DimensionError("shap: background entry " + shape_str(b.shape()) +
                             " does not match instance width " + std::to_string(width_));
      }
      const std::size_t len = b.shape()[0];
      std::vector<double> aligned(steps_ * width_);
      for (std::size_t t = 0; t < steps_; ++t) {
        const std::size_t src = t + len >= steps_ ? t + len - steps_ : 0;
        std::copy_n(b.values().begin() + static_cast<std::ptrdiff_t>(src * width_), width_,
                    aligned.begin() + static_cast<std::ptrdiff_t>(t * width_));
      }
      background_.push_back(std::move(aligned));
    }
    for (const Player& p : players_) {
      for (const CellRange& c : p.cells) {
        if (c.timestep >= steps_ || c.begin >= c.end || c.end > width_) {
          throw IndexError("shap: player '" + p.name + "' has a cell outside the instance");
        }
      }
    }
  }

  std::size_t players() const { return players_.size(); }
  const std::vector<Player>& player_list() const { return players_; }
  std::size_t background_size() const { return background_.size(); }
  std::size_t evaluations() const { return evaluations_; }

  // Mean model output over the background for each coalition.
  std::vector<double> operator()(const std::vector<Coalition>& coalitions) {
    const std::size_t per = background_.size();
    const std::size_t row = steps_ * width_;
    std::vector<double> out(coalitions.size(), 0.0);
    const std::size_t per_chunk = std::max<std::size_t>(1, kChunkRows / per);
    for (std::size_t first = 0; first < coalitions.size(); first += per_chunk) {
      const std::size_t last = std::min(coalitions.size(), first + per_chunk);
      std::vector<double> data;
      data.reserve((last - first) * per * row);
      for (std::size_t k = first; k < last; ++k) {
        const Coalition& s = coalitions[k];
        if (s.size() != players_.size()) {
          throw DimensionError("shap: coalition size does not match player count");
        }
        for (const auto& bg : background_) {
          const std::size_t base = data.size();
          data.insert(data.end(), bg.begin(), bg.end());
          for (std::size_t p = 0; p < players_.size(); ++p) {
            if (!s[p]) continue;
            for (const CellRange& c : players_[p].cells) {
              const std::size_t off = c.timestep * width_;
              std::copy(instance_.begin() + static_cast<std::ptrdiff_t>(off + c.begin),
                        instance_.begin() + static_cast<std::ptrdiff_t>(off + c.end),
                        data.begin() + static_cast<std::ptrdiff_t>(base + off + c.begin));
            }
          }
        }
      }
      const std::size_t rows = (last - first) * per;
      const std::vector<double> y = model_(Tensor({rows, steps_, width_}, std::move(data)));
      if (y.size() != rows) throw DimensionError("shap: model returned wrong output count");
      evaluations_ += rows;
      for (std::size_t k = first; k < last; ++k) {
        double total = 0.0;
        for (std::size_t b = 0; b < per; ++b) total += y[(k - first) * per + b];
        out[k] = total / static_cast<double>(per);
      }
    }
    return out;
  }

  double value_of(const Coalition& s) { return (*this)({s}).front(); }

 private:
  BatchModel model_;
  std::vector<Player> players_;
  std::size_t steps_ = 0, width_ = 0;
  std::vector<double> instance_;
  std::vector<std::vector<double>> background_;
  std::size_t evaluations_ = 0;
};

struct ShapleyResult {
  std::vector<double> values;           // one per player
  std::vector<double> standard_errors;  // kernel only
  double base_value = 0.0;              // v(empty): mean output over background
  double full_value = 0.0;              // v(all): model output at the instance
  std::size_t evaluations = 0;

  double efficiency_residual() const {
    return std::abs(std::accumulate(values.begin(), values.end(), 0.0) + base_value -
                    full_value);
  }
};

inline constexpr std::size_t kMaxExactPlayers = 14;

namespace detail {

inline Coalition mask_to_coalition(std::uint64_t mask, std::size_t players) {
  Coalition s(players);
  for (std::size_t p = 0; p < players; ++p) s[p] = (mask >> p) & 1U;
  return s;
}

// 1 / (n * C(n-1, k)) = k! (n-k-1)! / n!
inline double shapley_weight(std::size_t n, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c *= static_cast<double>(n - 1 - k + i) / static_cast<double>(i);
  }
  return 1.0 / (static_cast<double>(n) * c);
}

inline std::vector<double> all_coalition_values(CoalitionEvaluator& eval) {
  const std::size_t p = eval.players();
  std::vector<Coalition> all;
  all.reserve(std::size_t{1} << p);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << p); ++mask) {
    all.push_back(mask_to_coalition(mask, p));
  }
  return eval(all);
}

inline void require_exact_budget(std::size_t players) {
  if (players > kMaxExactPlayers) {
    throw ComplexityError("exact Shapley enumeration over " + std::to_string(players) +
                          " players exceeds the limit of " +
                          std::to_string(kMaxExactPlayers) + "; use the kernel estimator");
  }
}

}  // namespace detail

// Exact Shapley values by enumerating all 2^P coalitions.
inline ShapleyResult exact_shapley(CoalitionEvaluator& eval) {
  const std::size_t p = eval.players();
  detail::require_exact_budget(p);
  const std::vector<double> v = detail::all_coalition_values(eval);
  ShapleyResult r;
  r.values.assign(p, 0.0);
  for (std::uint64_t mask = 0; mask < v.size(); ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (size == p) continue;
    const double w = detail::shapley_weight(p, size);
    for (std::size_t j = 0; j < p; ++j) {
      if ((mask >> j) & 1U) continue;
      r.values[j] += w * (v[mask | (std::uint64_t{1} << j)] - v[mask]);
    }
  }
  r.base_value = v.front();
  r.full_value = v.back();
  r.evaluations = eval.evaluations();
  return r;
}

// Exact Owen values: players are partitioned into `groups` (group index per
// player). Each group's values sum to that group's Shapley value in the game
// played between groups.
inline ShapleyResult exact_owen(CoalitionEvaluator& eval, const std::vector<std::size_t>& group_of) {
  const std::size_t p = eval.players();
  detail::require_exact_budget(p);
  if (group_of.size() != p) throw DimensionError("owen: one group index per player required");
  const std::size_t n_groups = *std::max_element(group_of.begin(), group_of.end()) + 1;
  std::vector<std::uint64_t> group_mask(n_groups, 0);
  for (std::size_t j = 0; j < p; ++j) group_mask[group_of[j]] |= std::uint64_t{1} << j;
  for (std::uint64_t m : group_mask) {
    if (m == 0) throw ContractError("owen: group indices must be contiguous");
  }
  const std::vector<double> v = detail::all_coalition_values(eval);
  ShapleyResult r;
  r.values.assign(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t g = group_of[i];
    std::vector<std::size_t> others;
    for (std::size_t h = 0; h < n_groups; ++h) {
      if (h != g) others.push_back(h);
    }
    std::vector<std::size_t> mates;
    for (std::size_t j = 0; j < p; ++j) {
      if (group_of[j] == g && j != i) mates.push_back(j);
    }
    const std::size_t group_size = mates.size() + 1;
    for (std::uint64_t rsel = 0; rsel < (std::uint64_t{1} << others.size()); ++rsel) {
      std::uint64_t outer = 0;
      for (std::size_t k = 0; k < others.size(); ++k) {
        if ((rsel >> k) & 1U) outer |= group_mask[others[k]];
      }
      const double w_outer = detail::shapley_weight(
          n_groups, static_cast<std::size_t>(__builtin_popcountll(rsel)));
      for (std::uint64_t ksel = 0; ksel < (std::uint64_t{1} << mates.size()); ++ksel) {
        std::uint64_t inner = 0;
        for (std::size_t k = 0; k < mates.size(); ++k) {
          if ((ksel >> k) & 1U) inner |= std::uint64_t{1} << mates[k];
        }
        const double w_inner = detail::shapley_weight(
            group_size, static_cast<std::size_t>(__builtin_popcountll(ksel)));
        const std::uint64_t without = outer | inner;
        r.values[i] += w_outer * w_inner * (v[without | (std::uint64_t{1} << i)] - v[without]);
      }
    }
  }
  r.base_value = v.front();
  r.full_value = v.back();
  r.evaluations = eval.evaluations();
  return r;
}

inline std::size_t kernel_min_samples(std::size_t players) { return 2 * players + 4; }

// Kernel SHAP: coalition sizes drawn in proportion to the Shapley kernel's
// total weight per size, members uniform within a size, every draw paired
// with its complement. The least-squares fit is solved with the efficiency
// constraint eliminated exactly, so sum(values) + base = full always.
inline ShapleyResult kernel_shapley(CoalitionEvaluator& eval, std::size_t n_samples,
                                    std::uint64_t seed) {
  const std::size_t p = eval.players();
  if (p == 0) throw ContractError("shap: no players");
  if (n_samples < kernel_min_samples(p)) {
    throw ContractError("kernel SHAP needs at least " + std::to_string(kernel_min_samples(p)) +
                        " samples for " + std::to_string(p) + " players, got " +
                        std::to_string(n_samples));
  }
  const Coalition none(p, 0), all(p, 1);
  const std::vector<double> ends = eval({none, all});
  ShapleyResult r;
  r.base_value = ends[0];
  r.full_value = ends[1];
  const double delta = r.full_value - r.base_value;
  if (p == 1) {
    r.values = {delta};
    r.standard_errors = {0.0};
    r.evaluations = eval.evaluations();
    return r;
  }

  Rng rng(seed);
  std::vector<double> size_weights;
  for (std::size_t s = 1; s < p; ++s) {
    size_weights.push_back(1.0 / static_cast<double>(s * (p - s)));
  }
  std::vector<Coalition> samples;
  samples.reserve(n_samples);
  std::vector<std::size_t> order(p);
  while (samples.size() < n_samples) {
    const std::size_t size = rng.categorical(size_weights) + 1;
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < size; ++k) {
      std::swap(order[k], order[k + rng.index(p - k)]);
    }
    Coalition s(p, 0);
    for (std::size_t k = 0; k < size; ++k) s[order[k]] = 1;
    Coalition complement(p);
    for (std::size_t j = 0; j < p; ++j) complement[j] = 1 - s[j];
    samples.push_back(std::move(s));
    if (samples.size() < n_samples) samples.push_back(std::move(complement));
  }
  const std::vector<double> v = eval(samples);

  // y - z_last * delta = sum_{j < last} (z_j - z_last) phi_j
  const std::size_t k = p - 1;
  Eigen::MatrixXd a(samples.size(), k);
  Eigen::VectorXd y(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double last = samples[i][k];
    for (std::size_t j = 0; j < k; ++j) a(i, j) = samples[i][j] - last;
    y(i) = v[i] - r.base_value - last * delta;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (static_cast<std::size_t>(qr.rank()) < k) {
    throw DegeneracyError("kernel SHAP regression is singular (rank " +
                          std::to_string(qr.rank()) + " < " + std::to_string(k) +
                          "); increase n_samples");
  }
  const Eigen::VectorXd phi = qr.solve(y);
  r.values.assign(p, 0.0);
  double partial = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    r.values[j] = phi(j);
    partial += phi(j);
  }
  r.values[k] = delta - partial;

  const std::size_t dof = samples.size() > k ? samples.size() - k : 1;
  const double sigma2 = (a * phi - y).squaredNorm() / static_cast<double>(dof);
  const Eigen::MatrixXd cov =
      sigma2 * (a.transpose() * a).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  r.standard_errors.assign(p, 0.0);
  for (std::size_t j = 0; j < k; ++j) r.standard_errors[j] = std::sqrt(std::max(0.0, cov(j, j)));
  r.standard_errors[k] = std::sqrt(std::max(0.0, cov.sum()));
  r.evaluations = eval.evaluations();
  return r;
}

}  // namespace sleepx

#endif  // SLEEPX_SHAPLEY_HPP_
