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

#ifndef ICURISK_ATTRIBUTION_HPP
#define ICURISK_ATTRIBUTION_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "icurisk/network.hpp"
#include "icurisk/rng.hpp"
#include "icurisk/shapley.hpp"
#include "icurisk/tensor.hpp"

namespace icurisk {

// Contributions propagate relative to a reference input; every neuron's
// output difference splits into positive and negative parts. Affine layers
// (convolution, dense, pooling, inference batch norm) route by the linear
// rule; single-input nonlinearities (ReLU, sigmoid) use the RevealCancel
// rule; dropout is the identity at inference; concat and flatten only move
// indices around.

// Activations of both passes plus the signed delta split, per tap: index 0 is
// the input grid, index i + 1 the output of layer i, up to the target layer.
struct DeltaState {
  std::vector<Tensor> actual;
  std::vector<Tensor> reference;
  std::vector<Tensor> delta_pos;
  std::vector<Tensor> delta_neg;
  std::size_t end = 0;  // number of layers included

  double delta_t() const { return actual.back()[0] - reference.back()[0]; }
};

// Runs the network on both inputs (inference mode) and derives the delta
// split at every layer boundary.
DeltaState forward_pair(const Network& network, const Tensor& input, const Tensor& reference,
                        OutputTarget target);

// Input-to-target multipliers, separate positive-path and negative-path
// components; the recovered contribution of input cell j is
//   pos[j] * delta_pos[j] + neg[j] * delta_neg[j].
struct Multipliers {
  Tensor pos;
  Tensor neg;
};

// Chains the per-layer multipliers from the target back to the input.
Multipliers input_multipliers(const Network& network, const DeltaState& state);

struct AttributionMap {
  std::string patient_id;
  Tensor contributions;  // input-shaped signed grid
  double reference_output = 0.0;
  double actual_output = 0.0;
  double delta = 0.0;
  OutputTarget target = OutputTarget::kLogit;
  double additivity_residual = 0.0;  // |sum(contributions) - delta|
};

// Full DeepLIFT-style attribution of one input against a reference.
AttributionMap attribute(const Network& network, const Tensor& input, const Tensor& reference,
                         OutputTarget target);

// All-zeros reference in standardized space (the standardized empirical mean).
Tensor zero_reference(std::size_t channels, std::size_t time);

// ---------------------------------------------------------------------------
// Reference implementations of the propagation rules for a single neuron;
// the engine above inlines equivalent arithmetic.

// Four-way contribution split of one input to one affine output.
struct LinearContribution {
  double pos_to_dy_pos = 0.0;
  double neg_to_dy_pos = 0.0;
  double pos_to_dy_neg = 0.0;
  double neg_to_dy_neg = 0.0;
  double total() const { return pos_to_dy_pos + neg_to_dy_pos + pos_to_dy_neg + neg_to_dy_neg; }
};

struct LinearRuleResult {
  double dy_pos = 0.0;
  double dy_neg = 0.0;
  std::vector<LinearContribution> per_input;
};

// Linear rule for y = sum_i w_i x_i (+ bias): contributions route to the
// positive or negative output delta by the sign of w_i * dx_i.
LinearRuleResult linear_rule(std::span<const double> weights, std::span<const double> dx_pos,
                             std::span<const double> dx_neg);

struct RevealCancelResult {
  double dy_pos = 0.0;
  double dy_neg = 0.0;
  double m_pos = 0.0;  // dy_pos / dx_pos, 0 when dx_pos == 0
  double m_neg = 0.0;
};

// RevealCancel rule for a single-input nonlinearity f at reference
// pre-activation x0: the positive (negative) output delta averages the effect
// of adding dx_pos (dx_neg) before and after the opposite part.
RevealCancelResult reveal_cancel(const std::function<double(double)>& f, double x0, double dx_pos,
                                 double dx_neg);

// ---------------------------------------------------------------------------
// Monte-Carlo Shapley estimate over random insertion orders (unbiased for the
// exact value, error shrinking as 1/sqrt(n_samples)).

struct SampledShapleyResult {
  std::vector<double> values;
  std::vector<double> std_error;
  int n_samples = 0;
};

SampledShapleyResult sampled_shapley(const std::function<double(const Tensor&)>& f,
                                     const Tensor& input, const Tensor& reference,
                                     const GroupPartition& groups, int n_samples, Rng& rng);

}  // namespace icurisk

#endif  // ICURISK_ATTRIBUTION_HPP
