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

#include "icurisk/network.hpp"

#include <stdexcept>
#include <string>

namespace icurisk {

void ModelConfig::validate() const {
  if (channels < 1) throw std::invalid_argument("ModelConfig: channels must be >= 1");
  if (horizon_hours < 1) throw std::invalid_argument("ModelConfig: horizon must be >= 1");
  if (filters_per_scale < 1) throw std::invalid_argument("ModelConfig: filters_per_scale must be >= 1");
  if (hidden_units < 1) throw std::invalid_argument("ModelConfig: hidden_units must be >= 1");
  if (scales.empty()) throw std::invalid_argument("ModelConfig: scales must be nonempty");
  for (int s : scales) {
    if (s < 1 || s > horizon_hours) {
      throw std::invalid_argument("ModelConfig: scale " + std::to_string(s) +
                                  " must lie in [1, horizon=" + std::to_string(horizon_hours) + "]");
    }
  }
  if (!(dropout_keep > 0.0) || dropout_keep > 1.0) {
    throw std::invalid_argument("ModelConfig: dropout_keep must lie in (0, 1]");
  }
  if (pool_window < 1 || pool_stride < 1) {
    throw std::invalid_argument("ModelConfig: pool window and stride must be >= 1");
  }
  if (pool_window > horizon_hours) {
    throw std::invalid_argument("ModelConfig: pool window exceeds horizon");
  }
}

Network::Network(std::vector<std::unique_ptr<Layer>> layers) : layers_(std::move(layers)) {}

std::size_t Network::logit_end() const {
  if (!layers_.empty() && layers_.back()->kind() == LayerKind::kSigmoid) {
    return layers_.size() - 1;
  }
  return layers_.size();
}

std::size_t Network::target_end(OutputTarget target) const {
  return target == OutputTarget::kLogit ? logit_end() : layers_.size();
}

namespace {

double as_scalar(const Tensor& t, const char* what) {
  if (t.numel() != 1) {
    throw std::logic_error(std::string(what) + ": final activation has " +
                           std::to_string(t.numel()) + " values, expected a single output");
  }
  return t[0];
}

}  // namespace

double Network::predict_logit(const Tensor& input) const {
  Tensor x = input;
  const std::size_t end = logit_end();
  for (std::size_t i = 0; i < end; ++i) x = layers_[i]->infer(x);
  return as_scalar(x, "predict_logit");
}

double Network::predict(const Tensor& input) const {
  Tensor x = input;
  for (const auto& layer : layers_) x = layer->infer(x);
  return as_scalar(x, "predict");
}

double Network::predict_target(const Tensor& input, OutputTarget target) const {
  return target == OutputTarget::kLogit ? predict_logit(input) : predict(input);
}

std::vector<Tensor> Network::collect_taps(const Tensor& input, std::size_t end) const {
  std::vector<Tensor> taps;
  taps.reserve(end + 1);
  taps.push_back(input);
  for (std::size_t i = 0; i < end; ++i) taps.push_back(layers_[i]->infer(taps.back()));
  return taps;
}

std::vector<Tensor> Network::forward(const std::vector<Tensor>& batch, Mode mode, Rng* rng,
                                     std::size_t end) {
  std::vector<Tensor> x = batch;
  for (std::size_t i = 0; i < end; ++i) x = layers_[i]->forward(x, mode, rng);
  return x;
}

std::vector<Tensor> Network::forward(const std::vector<Tensor>& batch, Mode mode, Rng* rng) {
  return forward(batch, mode, rng, layers_.size());
}

std::vector<Tensor> Network::backward(const std::vector<Tensor>& upstream, std::size_t end) {
  std::vector<Tensor> g = upstream;
  for (std::size_t i = end; i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

std::vector<Tensor> Network::backward(const std::vector<Tensor>& upstream) {
  return backward(upstream, layers_.size());
}

std::vector<ParamRef> Network::parameters() {
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::vector<ParamRef> local;
    layers_[i]->collect_params(local);
    for (ParamRef& r : local) {
      r.name = "layer" + std::to_string(i) + "." + r.name;
      refs.push_back(r);
    }
  }
  return refs;
}

void Network::zero_grads() {
  for (ParamRef& r : parameters()) r.grad->fill(0.0);
}

std::size_t Network::num_parameters() {
  std::size_t n = 0;
  for (ParamRef& r : parameters()) n += r.value->numel();
  return n;
}

std::vector<std::size_t> Network::input_shape() const {
  if (layers_.empty()) return {};
  if (layers_.front()->kind() == LayerKind::kMultiScaleConv1d) {
    const auto& conv = static_cast<const MultiScaleConv1dLayer&>(*layers_.front());
    return {conv.branches().front().channels(), 0};  // time length is free
  }
  return {};
}

Network build_model(const ModelConfig& config, Rng& rng) {
  config.validate();
  const std::size_t channels = static_cast<std::size_t>(config.channels);
  const std::size_t horizon = static_cast<std::size_t>(config.horizon_hours);
  const std::size_t filters = static_cast<std::size_t>(config.filters_per_scale);

  std::vector<std::unique_ptr<Layer>> layers;

  std::vector<Conv1d> branches;
  branches.reserve(config.scales.size());
  for (int scale : config.scales) {
    const std::size_t width = static_cast<std::size_t>(scale);
    Tensor kernels = scaled_uniform_init({filters, channels, width}, channels * width, rng);
    Tensor bias({filters});
    branches.emplace_back(std::move(kernels), std::move(bias), Padding::kSame);
  }
  const std::size_t concat_channels = filters * config.scales.size();
  layers.push_back(std::make_unique<MultiScaleConv1dLayer>(std::move(branches)));
  layers.push_back(std::make_unique<ReluLayer>());

  auto pool = std::make_unique<AvgPool1dLayer>(static_cast<std::size_t>(config.pool_window),
                                               static_cast<std::size_t>(config.pool_stride));
  const std::size_t pooled_time = pool->output_time(horizon);
  layers.push_back(std::move(pool));

  auto push_regularizers = [&](std::size_t features) {
    auto dropout = std::make_unique<DropoutLayer>(config.dropout_keep);
    auto bn = std::make_unique<BatchNormLayer>(features, config.batchnorm_epsilon,
                                               config.batchnorm_momentum);
    if (config.batchnorm_before_dropout) {
      layers.push_back(std::move(bn));
      layers.push_back(std::move(dropout));
    } else {
      layers.push_back(std::move(dropout));
      layers.push_back(std::move(bn));
    }
  };

  push_regularizers(concat_channels);
  layers.push_back(std::make_unique<FlattenLayer>());

  const std::size_t flat = concat_channels * pooled_time;
  const std::size_t hidden = static_cast<std::size_t>(config.hidden_units);
  layers.push_back(std::make_unique<DenseLayer>(scaled_uniform_init({hidden, flat}, flat, rng),
                                                Tensor({hidden})));
  layers.push_back(std::make_unique<ReluLayer>());
  push_regularizers(hidden);
  layers.push_back(std::make_unique<DenseLayer>(scaled_uniform_init({1, hidden}, hidden, rng),
                                                Tensor({1})));
  layers.push_back(std::make_unique<SigmoidLayer>());

  return Network(std::move(layers));
}

Network build_model(const ModelConfig& config) {
  Rng rng(config.seed);
  return build_model(config, rng);
}

}  // namespace icurisk
