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

#ifndef ICURISK_NETWORK_HPP
#define ICURISK_NETWORK_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "icurisk/layers.hpp"
#include "icurisk/rng.hpp"
#include "icurisk/tensor.hpp"

namespace icurisk {

// Which model output an attribution or game explains.
enum class OutputTarget { kLogit, kProbability };

struct ModelConfig {
  int channels = 22;
  int horizon_hours = 48;
  int filters_per_scale = 32;
  std::vector<int> scales = {3, 6, 12};
  int hidden_units = 64;
  double dropout_keep = 0.55;
  int pool_window = 3;
  int pool_stride = 3;
  double batchnorm_epsilon = 1e-3;
  double batchnorm_momentum = 0.99;
  // The concatenation block applies dropout first, then batch normalization;
  // set to true to swap the two (both orders appear in practice).
  bool batchnorm_before_dropout = false;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument on bad values
};

// An ordered layer stack ending (for built risk models) in a one-unit dense
// layer plus logistic activation. The stack itself is generic: tests and the
// attribution verifier also assemble small custom stacks directly.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<std::unique_ptr<Layer>> layers);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  std::size_t num_layers() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  // Index one past the layer producing the pre-sigmoid output: the full stack
  // when there is no trailing sigmoid.
  std::size_t logit_end() const;
  std::size_t target_end(OutputTarget target) const;

  // Pure single-input inference. Safe to call concurrently; the network is
  // not mutated.
  double predict(const Tensor& input) const;
  double predict_logit(const Tensor& input) const;
  double predict_target(const Tensor& input, OutputTarget target) const;

  // Inference pass that records the activation after every layer in
  // [0, end); taps[0] is the input itself, taps[i + 1] the output of layer i.
  std::vector<Tensor> collect_taps(const Tensor& input, std::size_t end) const;

  // Batched training-path API. forward() caches per-layer state for
  // backward(); backward() accumulates parameter gradients and returns the
  // gradient w.r.t. the inputs.
  std::vector<Tensor> forward(const std::vector<Tensor>& batch, Mode mode, Rng* rng,
                              std::size_t end);
  std::vector<Tensor> forward(const std::vector<Tensor>& batch, Mode mode, Rng* rng);
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream, std::size_t end);
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream);

  std::vector<ParamRef> parameters();
  void zero_grads();
  std::size_t num_parameters();

  // Input contract of the built model; zero for hand-assembled stacks whose
  // first layer is not a convolution block.
  std::vector<std::size_t> input_shape() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Assembles the multi-scale risk model: parallel temporal convolutions at the
// configured widths, ReLU, channel concat, average pooling, dropout + batch
// normalization, one hidden dense layer (ReLU, dropout + batch norm again)
// and a one-unit logistic head. Weights come from the rng via the
// scaled-uniform fan-in scheme, so the same seed rebuilds the same bits.
Network build_model(const ModelConfig& config, Rng& rng);
Network build_model(const ModelConfig& config);

}  // namespace icurisk

#endif  // ICURISK_NETWORK_HPP
