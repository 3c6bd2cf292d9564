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

#ifndef ICURISK_LAYERS_HPP
#define ICURISK_LAYERS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "icurisk/rng.hpp"
#include "icurisk/tensor.hpp"

namespace icurisk {

enum class Mode { kTrain, kInfer };
enum class Padding { kSame, kValid };

enum class LayerKind : std::uint8_t {
  kMultiScaleConv1d = 1,
  kRelu = 2,
  kAvgPool1d = 3,
  kBatchNorm = 4,
  kDropout = 5,
  kFlatten = 6,
  kDense = 7,
  kSigmoid = 8,
};

// Named view onto a trainable tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

// One stage of the forward pipeline. forward() processes a mini-batch and
// caches whatever backward() needs; infer() is the pure single-sample path
// (no caching, safe to call concurrently on a const network).
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::string name() const = 0;

  virtual std::vector<Tensor> forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) = 0;
  virtual std::vector<Tensor> backward(const std::vector<Tensor>& upstream) = 0;
  virtual Tensor infer(const Tensor& input) const = 0;

  virtual void collect_params(std::vector<ParamRef>& out) { (void)out; }

 protected:
  void require_cache(bool ok) const;
};

// Uniform init in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
Tensor scaled_uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng);

// 1-D temporal convolution of a [channels, time] map with [filters, channels,
// width] kernels (cross-correlation, the usual deep-learning convention).
// Same padding zero-pads so the output keeps the input time length.
class Conv1d {
 public:
  Conv1d(Tensor kernels, Tensor bias, Padding padding);

  Tensor apply(const Tensor& input) const;
  // Accumulates kernel/bias gradients and returns the input gradient.
  Tensor backprop(const Tensor& input, const Tensor& upstream);

  std::size_t filters() const { return kernels_.size(0); }
  std::size_t channels() const { return kernels_.size(1); }
  std::size_t width() const { return kernels_.size(2); }
  Padding padding() const { return padding_; }

  const Tensor& kernels() const { return kernels_; }
  const Tensor& bias() const { return bias_; }
  Tensor& kernels() { return kernels_; }
  Tensor& bias() { return bias_; }
  Tensor& kernel_grad() { return kernel_grad_; }
  Tensor& bias_grad() { return bias_grad_; }

  std::size_t output_time(std::size_t input_time) const;
  // Leftmost input offset covered by output position 0 (negative for same
  // padding). Input index for (t_out, w) is t_out + w + this offset.
  long long input_offset() const;

 private:
  Tensor kernels_;  // [filters, channels, width]
  Tensor bias_;     // [filters]
  Padding padding_;
  Tensor kernel_grad_;
  Tensor bias_grad_;
};

// Parallel Conv1d branches over the same input, outputs concatenated along
// the channel axis. A single branch degenerates to a plain convolution.
class MultiScaleConv1dLayer : public Layer {
 public:
  explicit MultiScaleConv1dLayer(std::vector<Conv1d> branches);

  LayerKind kind() const override { return LayerKind::kMultiScaleConv1d; }
  std::string name() const override { return "multiscale_conv1d"; }

  std::vector<Tensor> forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;
  Tensor infer(const Tensor& input) const override;
  void collect_params(std::vector<ParamRef>& out) override;

  const std::vector<Conv1d>& branches() const { return branches_; }
  std::vector<Conv1d>& branches() { return branches_; }
  std::size_t total_filters() const;

 private:
  std::vector<Conv1d> branches_;
  std::vector<Tensor> cached_inputs_;
};

class ReluLayer : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kRelu; }
  std::string name() const override { return "relu"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;
  Tensor infer(const Tensor& input) const override;

 private:
  std::vector<Tensor> cached_inputs_;
};

class SigmoidLayer : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kSigmoid; }
  std::string name() const override { return "sigmoid"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;
  Tensor infer(const Tensor& input) const override;

 private:
  std::vector<Tensor> cached_outputs_;
};

double sigmoid(double x);

// Mean over non-overlapping (or strided) windows along time; trailing
// partial windows are dropped.
class AvgPool1dLayer : public Layer {
 public:
  AvgPool1dLayer(std::size_t window, std::size_t stride);

  LayerKind kind() const override { return LayerKind::kAvgPool1d; }
  std::string name() const override { return "avgpool1d"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;
  Tensor infer(const Tensor& input) const override;

  std::size_t window() const { return window_; }
  std::size_t stride() const { return stride_; }
  std::size_t output_time(std::size_t input_time) const;

 private:
  std::size_t window_;
  std::size_t stride_;
  std::vector<std::vector<std::size_t>> cached_shapes_;
};

// Per-feature batch normalization. For [channels, time] inputs statistics run
// over batch x time per channel; for [n] inputs over the batch per element.
// Inference uses running statistics and is rejected until at least one
// training step has populated them.
class BatchNormLayer : public Layer {
 public:
  BatchNormLayer(std::size_t features, double epsilon, double momentum);
  ~BatchNormLayer() override;

  LayerKind kind() const override { return LayerKind::kBatchNorm; }
  std::string name() const override { return "batchnorm"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;
  Tensor infer(const Tensor& input) const override;
  void collect_params(std::vector<ParamRef>& out) override;

  std::size_t features() const { return scale_.numel(); }
  double epsilon() const { return epsilon_; }
  double momentum() const { return momentum_; }
  bool primed() const { return steps_seen_ > 0; }
  std::uint64_t steps_seen() const { return steps_seen_; }
  void set_running_stats(Tensor mean, Tensor variance, std::uint64_t steps_seen);

  const Tensor& scale() const { return scale_; }
  const Tensor& shift() const { return shift_; }
  Tensor& scale() { return scale_; }
  Tensor& shift() { return shift_; }
  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }

 private:
  struct Cache;
  double epsilon_;
  double momentum_;
  Tensor scale_;         // gamma
  Tensor shift_;         // beta
  Tensor scale_grad_;
  Tensor shift_grad_;
  Tensor running_mean_;
  Tensor running_var_;
  std::uint64_t steps_seen_ = 0;
  std::unique_ptr<Cache> cache_;
};

// Inverted dropout: train-mode survivors are scaled by 1/keep_prob so that
// inference is the exact identity.
class DropoutLayer : public Layer {
 public:
  explicit DropoutLayer(double keep_prob);

  LayerKind kind() const override { return LayerKind::kDropout; }
  std::string name() const override { return "dropout"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;
  Tensor infer(const Tensor& input) const override;

  double keep_prob() const { return keep_prob_; }

 private:
  double keep_prob_;
  std::vector<Tensor> cached_masks_;  // already scaled by 1/keep
  bool cached_ = false;
};

class FlattenLayer : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kFlatten; }
  std::string name() const override { return "flatten"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;
  Tensor infer(const Tensor& input) const override;

 private:
  std::vector<std::vector<std::size_t>> cached_shapes_;
};

// Fully connected map of an [in] vector to [out]: y = W x + b.
class DenseLayer : public Layer {
 public:
  DenseLayer(Tensor weights, Tensor bias);

  LayerKind kind() const override { return LayerKind::kDense; }
  std::string name() const override { return "dense"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;
  Tensor infer(const Tensor& input) const override;
  void collect_params(std::vector<ParamRef>& out) override;

  std::size_t in_features() const { return weights_.size(1); }
  std::size_t out_features() const { return weights_.size(0); }
  const Tensor& weights() const { return weights_; }
  const Tensor& bias() const { return bias_; }
  Tensor& weights() { return weights_; }
  Tensor& bias() { return bias_; }

 private:
  Tensor weights_;  // [out, in]
  Tensor bias_;     // [out]
  Tensor weight_grad_;
  Tensor bias_grad_;
  std::vector<Tensor> cached_inputs_;
};

}  // namespace icurisk

#endif  // ICURISK_LAYERS_HPP
