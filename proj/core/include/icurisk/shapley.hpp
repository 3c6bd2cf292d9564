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

#ifndef ICURISK_SHAPLEY_HPP
#define ICURISK_SHAPLEY_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "icurisk/network.hpp"
#include "icurisk/tensor.hpp"

namespace icurisk {

// Number of players exact enumeration accepts: 2^20 worth evaluations stays
// around a minute on a small model, growth beyond that is hopeless.
inline constexpr int kMaxExactShapleyPlayers = 20;

// A coalitional game over n players. Coalitions are bitmasks (bit i set means
// player i present). Callers normalize so worth(0) == 0.
struct CoalitionalGame {
  int n_players = 0;
  std::function<double(std::uint32_t)> worth;
};

struct ShapleyResult {
  std::vector<double> values;
  double efficiency_residual = 0.0;  // |sum(values) - worth(full coalition)|
};

// Exact Shapley values by exhaustive subset enumeration. Every coalition's
// worth is evaluated exactly once (memoized) and reused for all n marginal
// differences, so the cost is 2^n worth calls.
ShapleyResult exact_shapley(const CoalitionalGame& game);

// Grouping of flat tensor indices into players.
using GroupPartition = std::vector<std::vector<std::size_t>>;

// One group per channel of a [channels, time] grid.
GroupPartition per_channel_groups(std::size_t channels, std::size_t time);

// Rejects overlapping or incomplete partitions of a grid with numel cells.
void validate_group_partition(const GroupPartition& groups, std::size_t numel);

// The model-explanation game: players are cell groups, a present player takes
// its actual values, an absent one its reference values, and the worth is the
// network output on the hybrid input minus the output on the full reference.
// The groups must partition the grid exactly (no overlap, no gap).
CoalitionalGame model_game(const Network& network, const Tensor& input, const Tensor& reference,
                           const GroupPartition& groups, OutputTarget target);

// Same construction for an arbitrary scoring function.
CoalitionalGame function_game(std::function<double(const Tensor&)> f, const Tensor& input,
                              const Tensor& reference, const GroupPartition& groups);

}  // namespace icurisk

#endif  // ICURISK_SHAPLEY_HPP
