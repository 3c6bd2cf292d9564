/*
 * Copyright 2026 The icurisk Authors
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

#include "icurisk/shapley.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace icurisk {

namespace {

// Shapley coalition weight (n-s-1)! s! / n! expressed as 1 / (n * C(n-1, s));
// binomials up to n=20 are exactly representable, factorials are not.
std::vector<double> coalition_weights(int n) {
  std::vector<double> w(n);
  double binom = 1.0;  // C(n-1, s) rolling
  for (int s = 0; s < n; ++s) {
    w[s] = 1.0 / (static_cast<double>(n) * binom);
    binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
  }
  return w;
}

}  // namespace

ShapleyResult exact_shapley(const CoalitionalGame& game) {
  const int n = game.n_players;
  if (n < 1) throw std::invalid_argument("exact_shapley: need at least one player");
  if (n > kMaxExactShapleyPlayers) {
    const double cost = std::ldexp(1.0, n);
    throw std::invalid_argument("exact_shapley: " + std::to_string(n) + " players need about " +
                                std::to_string(static_cast<long long>(cost)) +
                                " worth evaluations; the exact cap is " +
                                std::to_string(kMaxExactShapleyPlayers) + " players");
  }
  if (!game.worth) throw std::invalid_argument("exact_shapley: game has no worth function");

  const std::uint32_t n_masks = 1u << n;
  std::vector<double> worth(n_masks);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) worth[mask] = game.worth(mask);

  const std::vector<double> weights = coalition_weights(n);
  ShapleyResult result;
  result.values.assign(n, 0.0);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    const int s = std::popcount(mask);
    for (int i = 0; i < n; ++i) {
      const std::uint32_t bit = 1u << i;
      if (mask & bit) continue;
      result.values[i] += weights[s] * (worth[mask | bit] - worth[mask]);
    }
  }

  double total = 0.0;
  for (double v : result.values) total += v;
  result.efficiency_residual = std::abs(total - (worth[n_masks - 1] - worth[0]));
  return result;
}

GroupPartition per_channel_groups(std::size_t channels, std::size_t time) {
  GroupPartition groups(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    groups[c].reserve(time);
    for (std::size_t t = 0; t < time; ++t) groups[c].push_back(c * time + t);
  }
  return groups;
}

void validate_group_partition(const GroupPartition& groups, std::size_t numel) {
  if (groups.empty()) throw std::invalid_argument("model_game: empty group partition");
  std::vector<char> seen(numel, 0);
  std::size_t covered = 0;
  for (const auto& g : groups) {
    for (std::size_t idx : g) {
      if (idx >= numel) {
        throw std::invalid_argument("model_game: group index " + std::to_string(idx) +
                                    " outside grid of " + std::to_string(numel) + " cells");
      }
      if (seen[idx]) {
        throw std::invalid_argument("model_game: overlapping partition at cell " +
                                    std::to_string(idx));
      }
      seen[idx] = 1;
      ++covered;
    }
  }
  if (covered != numel) {
    throw std::invalid_argument("model_game: partition covers " + std::to_string(covered) +
                               " of " + std::to_string(numel) + " cells");
  }
}

CoalitionalGame function_game(std::function<double(const Tensor&)> f, const Tensor& input,
                              const Tensor& reference, const GroupPartition& groups) {
  require_same_shape(input, reference, "function_game");
  validate_group_partition(groups, input.numel());

  const double base = f(reference);
  CoalitionalGame game;
  game.n_players = static_cast<int>(groups.size());
  game.worth = [f = std::move(f), input, reference, groups, base](std::uint32_t mask) {
    Tensor hybrid = reference;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (mask & (1u << g)) {
        for (std::size_t idx : groups[g]) hybrid[idx] = input[idx];
      }
    }
    return f(hybrid) - base;
  };
  return game;
}

CoalitionalGame model_game(const Network& network, const Tensor& input, const Tensor& reference,
                           const GroupPartition& groups, OutputTarget target) {
  return function_game(
      [&network, target](const Tensor& x) { return network.predict_target(x, target); }, input,
      reference, groups);
}

}  // namespace icurisk
