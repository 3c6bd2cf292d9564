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

#include "icurisk/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace icurisk {

void Layer::require_cache(bool ok) const {
  if (!ok) {
    throw std::logic_error(name() + ": backward called without a cached forward pass");
  }
}

Tensor scaled_uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
  return t;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(Tensor kernels, Tensor bias, Padding padding)
    : kernels_(std::move(kernels)), bias_(std::move(bias)), padding_(padding) {
  if (kernels_.rank() != 3) {
    throw std::invalid_argument("Conv1d: kernels must be [filters, channels, width], got " +
                                shape_to_string(kernels_.shape()));
  }
  if (bias_.rank() != 1 || bias_.size(0) != kernels_.size(0)) {
    throw std::invalid_argument("Conv1d: bias shape " + shape_to_string(bias_.shape()) +
                                " does not match " + std::to_string(kernels_.size(0)) + " filters");
  }
  kernel_grad_ = kernels_.zeros_like();
  bias_grad_ = bias_.zeros_like();
}

std::size_t Conv1d::output_time(std::size_t input_time) const {
  if (padding_ == Padding::kSame) return input_time;
  if (input_time < width()) {
    throw std::invalid_argument("Conv1d: input time length " + std::to_string(input_time) +
                                " shorter than kernel width " + std::to_string(width()) +
                                " with valid padding");
  }
  return input_time - width() + 1;
}

long long Conv1d::input_offset() const {
  if (padding_ == Padding::kSame) {
    return -static_cast<long long>((width() - 1) / 2);
  }
  return 0;
}

namespace {

void check_conv_input(const Tensor& input, std::size_t channels) {
  if (input.rank() != 2) {
    throw std::invalid_argument("Conv1d: input must be [channels, time], got " +
                                shape_to_string(input.shape()));
  }
  if (input.size(0) != channels) {
    throw std::invalid_argument("Conv1d: kernel channel dimension " + std::to_string(channels) +
                                " does not match input channels " + std::to_string(input.size(0)) +
                                " (input " + shape_to_string(input.shape()) + ")");
  }
}

}  // namespace

Tensor Conv1d::apply(const Tensor& input) const {
  check_conv_input(input, channels());
  const std::size_t T = input.size(1);
  const std::size_t To = output_time(T);
  const long long off = input_offset();
  const std::size_t F = filters(), C = channels(), W = width();

  Tensor out({F, To});
  for (std::size_t f = 0; f < F; ++f) {
    double* out_row = out.data() + f * To;
    const double b = bias_[f];
    for (std::size_t t = 0; t < To; ++t) out_row[t] = b;
    for (std::size_t c = 0; c < C; ++c) {
      const double* in_row = input.data() + c * T;
      for (std::size_t w = 0; w < W; ++w) {
        const double k = kernels_.at(f, c, w);
        const long long shift = static_cast<long long>(w) + off;
        const std::size_t t0 = shift < 0 ? static_cast<std::size_t>(-shift) : 0;
        const long long hi = static_cast<long long>(T) - shift;
        const std::size_t t1 = hi <= 0 ? 0 : std::min<std::size_t>(To, static_cast<std::size_t>(hi));
        const double* src = in_row + shift;
        for (std::size_t t = t0; t < t1; ++t) out_row[t] += k * src[t];
      }
    }
  }
  return out;
}

Tensor Conv1d::backprop(const Tensor& input, const Tensor& upstream) {
  check_conv_input(input, channels());
  const std::size_t T = input.size(1);
  const std::size_t To = output_time(T);
  if (upstream.rank() != 2 || upstream.size(0) != filters() || upstream.size(1) != To) {
    throw std::invalid_argument("Conv1d: upstream gradient shape " +
                                shape_to_string(upstream.shape()) + " does not match output");
  }
  const long long off = input_offset();
  const std::size_t F = filters(), C = channels(), W = width();

  Tensor input_grad(input.shape());
  for (std::size_t f = 0; f < F; ++f) {
    const double* g_row = upstream.data() + f * To;
    double gsum = 0.0;
    for (std::size_t t = 0; t < To; ++t) gsum += g_row[t];
    bias_grad_[f] += gsum;
    for (std::size_t c = 0; c < C; ++c) {
      const double* in_row = input.data() + c * T;
      double* din_row = input_grad.data() + c * T;
      for (std::size_t w = 0; w < W; ++w) {
        const long long shift = static_cast<long long>(w) + off;
        const std::size_t t0 = shift < 0 ? static_cast<std::size_t>(-shift) : 0;
        const long long hi = static_cast<long long>(T) - shift;
        const std::size_t t1 = hi <= 0 ? 0 : std::min<std::size_t>(To, static_cast<std::size_t>(hi));
        const double* src = in_row + shift;
        double* dst = din_row + shift;
        const double k = kernels_.at(f, c, w);
        double acc = 0.0;
        for (std::size_t t = t0; t < t1; ++t) {
          acc += g_row[t] * src[t];
          dst[t] += g_row[t] * k;
        }
        kernel_grad_.at(f, c, w) += acc;
      }
    }
  }
  return input_grad;
}

// ---------------------------------------------------------------------------
// MultiScaleConv1dLayer

MultiScaleConv1dLayer::MultiScaleConv1dLayer(std::vector<Conv1d> branches)
    : branches_(std::move(branches)) {
  if (branches_.empty()) {
    throw std::invalid_argument("MultiScaleConv1d: needs at least one branch");
  }
  for (const Conv1d& b : branches_) {
    if (b.channels() != branches_.front().channels()) {
      throw std::invalid_argument("MultiScaleConv1d: branches disagree on input channels");
    }
  }
}

std::size_t MultiScaleConv1dLayer::total_filters() const {
  std::size_t n = 0;
  for (const Conv1d& b : branches_) n += b.filters();
  return n;
}

Tensor MultiScaleConv1dLayer::infer(const Tensor& input) const {
  const std::size_t To = branches_.front().output_time(input.size(1));
  for (const Conv1d& b : branches_) {
    if (b.output_time(input.size(1)) != To) {
      throw std::invalid_argument("MultiScaleConv1d: branch time lengths differ; concat requires same padding");
    }
  }
  Tensor out({total_filters(), To});
  std::size_t row = 0;
  for (const Conv1d& b : branches_) {
    Tensor part = b.apply(input);
    std::copy(part.data(), part.data() + part.numel(), out.data() + row * To);
    row += b.filters();
  }
  return out;
}

std::vector<Tensor> MultiScaleConv1dLayer::forward(const std::vector<Tensor>& inputs, Mode, Rng*) {
  cached_inputs_ = inputs;
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& x : inputs) out.push_back(infer(x));
  return out;
}

std::vector<Tensor> MultiScaleConv1dLayer::backward(const std::vector<Tensor>& upstream) {
  require_cache(!cached_inputs_.empty() && cached_inputs_.size() == upstream.size());
  std::vector<Tensor> grads;
  grads.reserve(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    const Tensor& x = cached_inputs_[i];
    const Tensor& g = upstream[i];
    const std::size_t To = g.size(1);
    Tensor input_grad(x.shape());
    std::size_t row = 0;
    for (Conv1d& b : branches_) {
      Tensor slice({b.filters(), To});
      std::copy(g.data() + row * To, g.data() + (row + b.filters()) * To, slice.data());
      Tensor part = b.backprop(x, slice);
      for (std::size_t j = 0; j < input_grad.numel(); ++j) input_grad[j] += part[j];
      row += b.filters();
    }
    grads.push_back(std::move(input_grad));
  }
  return grads;
}

void MultiScaleConv1dLayer::collect_params(std::vector<ParamRef>& out) {
  for (Conv1d& b : branches_) {
    const std::string tag = "conv_w" + std::to_string(b.width());
    out.push_back({tag + ".kernels", &b.kernels(), &b.kernel_grad()});
    out.push_back({tag + ".bias", &b.bias(), &b.bias_grad()});
  }
}

// ---------------------------------------------------------------------------
// ReluLayer

std::vector<Tensor> ReluLayer::forward(const std::vector<Tensor>& inputs, Mode, Rng*) {
  cached_inputs_ = inputs;
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& x : inputs) out.push_back(infer(x));
  return out;
}

Tensor ReluLayer::infer(const Tensor& input) const {
  Tensor y = input;
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
  return y;
}

std::vector<Tensor> ReluLayer::backward(const std::vector<Tensor>& upstream) {
  require_cache(cached_inputs_.size() == upstream.size() && !upstream.empty());
  std::vector<Tensor> grads;
  grads.reserve(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    Tensor g = upstream[i];
    const Tensor& x = cached_inputs_[i];
    for (std::size_t j = 0; j < g.numel(); ++j) {
      if (x[j] <= 0.0) g[j] = 0.0;
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// ---------------------------------------------------------------------------
// SigmoidLayer

std::vector<Tensor> SigmoidLayer::forward(const std::vector<Tensor>& inputs, Mode, Rng*) {
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& x : inputs) out.push_back(infer(x));
  cached_outputs_ = out;
  return out;
}

Tensor SigmoidLayer::infer(const Tensor& input) const {
  Tensor y = input;
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = sigmoid(y[i]);
  return y;
}

std::vector<Tensor> SigmoidLayer::backward(const std::vector<Tensor>& upstream) {
  require_cache(cached_outputs_.size() == upstream.size() && !upstream.empty());
  std::vector<Tensor> grads;
  grads.reserve(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    Tensor g = upstream[i];
    const Tensor& y = cached_outputs_[i];
    for (std::size_t j = 0; j < g.numel(); ++j) g[j] *= y[j] * (1.0 - y[j]);
    grads.push_back(std::move(g));
  }
  return grads;
}

// ---------------------------------------------------------------------------
// AvgPool1dLayer

AvgPool1dLayer::AvgPool1dLayer(std::size_t window, std::size_t stride)
    : window_(window), stride_(stride) {
  if (window_ < 1 || stride_ < 1) {
    throw std::invalid_argument("AvgPool1d: window and stride must be >= 1");
  }
}

std::size_t AvgPool1dLayer::output_time(std::size_t input_time) const {
  if (window_ > input_time) {
    throw std::invalid_argument("AvgPool1d: window " + std::to_string(window_) +
                                " exceeds time length " + std::to_string(input_time));
  }
  return (input_time - window_) / stride_ + 1;
}

Tensor AvgPool1dLayer::infer(const Tensor& input) const {
  if (input.rank() != 2) {
    throw std::invalid_argument("AvgPool1d: input must be [channels, time]");
  }
  const std::size_t C = input.size(0), T = input.size(1);
  const std::size_t To = output_time(T);
  const double inv = 1.0 / static_cast<double>(window_);
  Tensor out({C, To});
  for (std::size_t c = 0; c < C; ++c) {
    const double* in_row = input.data() + c * T;
    double* out_row = out.data() + c * To;
    for (std::size_t t = 0; t < To; ++t) {
      double acc = 0.0;
      const double* w = in_row + t * stride_;
      for (std::size_t k = 0; k < window_; ++k) acc += w[k];
      out_row[t] = acc * inv;
    }
  }
  return out;
}

std::vector<Tensor> AvgPool1dLayer::forward(const std::vector<Tensor>& inputs, Mode, Rng*) {
  cached_shapes_.clear();
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& x : inputs) {
    cached_shapes_.push_back(x.shape());
    out.push_back(infer(x));
  }
  return out;
}

std::vector<Tensor> AvgPool1dLayer::backward(const std::vector<Tensor>& upstream) {
  require_cache(cached_shapes_.size() == upstream.size() && !upstream.empty());
  const double inv = 1.0 / static_cast<double>(window_);
  std::vector<Tensor> grads;
  grads.reserve(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    const Tensor& g = upstream[i];
    Tensor dx(cached_shapes_[i]);
    const std::size_t C = dx.size(0), T = dx.size(1), To = g.size(1);
    for (std::size_t c = 0; c < C; ++c) {
      const double* g_row = g.data() + c * To;
      double* dx_row = dx.data() + c * T;
      for (std::size_t t = 0; t < To; ++t) {
        const double v = g_row[t] * inv;
        double* w = dx_row + t * stride_;
        for (std::size_t k = 0; k < window_; ++k) w[k] += v;
      }
    }
    grads.push_back(std::move(dx));
  }
  return grads;
}

// ---------------------------------------------------------------------------
// BatchNormLayer

struct BatchNormLayer::Cache {
  Mode mode = Mode::kTrain;
  std::vector<Tensor> x_hat;
  Tensor inv_std;    // per feature
  std::size_t group_size = 0;  // elements per feature in the normalization set
  bool valid = false;
};

BatchNormLayer::~BatchNormLayer() = default;

BatchNormLayer::BatchNormLayer(std::size_t features, double epsilon, double momentum)
    : epsilon_(epsilon), momentum_(momentum) {
  if (features == 0) throw std::invalid_argument("BatchNorm: zero features");
  if (epsilon_ <= 0.0) throw std::invalid_argument("BatchNorm: epsilon must be positive");
  if (momentum_ < 0.0 || momentum_ >= 1.0) {
    throw std::invalid_argument("BatchNorm: momentum must lie in [0, 1)");
  }
  scale_ = Tensor({features});
  scale_.fill(1.0);
  shift_ = Tensor({features});
  scale_grad_ = scale_.zeros_like();
  shift_grad_ = shift_.zeros_like();
  running_mean_ = Tensor({features});
  running_var_ = Tensor({features});
  running_var_.fill(1.0);
  cache_ = std::make_unique<Cache>();
}

void BatchNormLayer::set_running_stats(Tensor mean, Tensor variance, std::uint64_t steps_seen) {
  require_same_shape(mean, running_mean_, "BatchNorm::set_running_stats");
  require_same_shape(variance, running_var_, "BatchNorm::set_running_stats");
  for (std::size_t i = 0; i < variance.numel(); ++i) {
    if (variance[i] < 0.0) throw std::invalid_argument("BatchNorm: running variance must be >= 0");
  }
  running_mean_ = std::move(mean);
  running_var_ = std::move(variance);
  steps_seen_ = steps_seen;
}

namespace {

// feature index and per-feature element count for a batch of equally shaped
// rank-1 or rank-2 tensors
std::size_t bn_feature_dim(const Tensor& x) { return x.size(0); }

}  // namespace

std::vector<Tensor> BatchNormLayer::forward(const std::vector<Tensor>& inputs, Mode mode, Rng*) {
  if (inputs.empty()) throw std::invalid_argument("BatchNorm: empty batch");
  const Tensor& first = inputs.front();
  if (first.rank() != 1 && first.rank() != 2) {
    throw std::invalid_argument("BatchNorm: expects rank-1 or rank-2 inputs");
  }
  if (bn_feature_dim(first) != features()) {
    throw std::invalid_argument("BatchNorm: configured for " + std::to_string(features()) +
                                " features, input has " + std::to_string(bn_feature_dim(first)));
  }
  const std::size_t N = features();
  const std::size_t inner = first.rank() == 2 ? first.size(1) : 1;
  const std::size_t m = inputs.size() * inner;

  cache_->mode = mode;
  cache_->valid = true;
  cache_->group_size = m;
  cache_->x_hat.clear();

  Tensor mean({N}), var({N});
  if (mode == Mode::kTrain) {
    for (const Tensor& x : inputs) {
      require_same_shape(x, first, "BatchNorm");
      for (std::size_t f = 0; f < N; ++f) {
        const double* row = x.data() + f * inner;
        for (std::size_t j = 0; j < inner; ++j) mean[f] += row[j];
      }
    }
    for (std::size_t f = 0; f < N; ++f) mean[f] /= static_cast<double>(m);
    for (const Tensor& x : inputs) {
      for (std::size_t f = 0; f < N; ++f) {
        const double* row = x.data() + f * inner;
        for (std::size_t j = 0; j < inner; ++j) {
          const double d = row[j] - mean[f];
          var[f] += d * d;
        }
      }
    }
    for (std::size_t f = 0; f < N; ++f) var[f] /= static_cast<double>(m);
    for (std::size_t f = 0; f < N; ++f) {
      running_mean_[f] = momentum_ * running_mean_[f] + (1.0 - momentum_) * mean[f];
      running_var_[f] = momentum_ * running_var_[f] + (1.0 - momentum_) * var[f];
    }
    ++steps_seen_;
  } else {
    if (!primed()) {
      throw std::logic_error("BatchNorm: inference requested before any training step populated running statistics");
    }
    mean = running_mean_;
    var = running_var_;
  }

  Tensor inv_std({N});
  for (std::size_t f = 0; f < N; ++f) inv_std[f] = 1.0 / std::sqrt(var[f] + epsilon_);

  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& x : inputs) {
    Tensor xh(x.shape());
    Tensor y(x.shape());
    for (std::size_t f = 0; f < N; ++f) {
      const double* row = x.data() + f * inner;
      double* xh_row = xh.data() + f * inner;
      double* y_row = y.data() + f * inner;
      const double mu = mean[f], is = inv_std[f], g = scale_[f], b = shift_[f];
      for (std::size_t j = 0; j < inner; ++j) {
        xh_row[j] = (row[j] - mu) * is;
        y_row[j] = g * xh_row[j] + b;
      }
    }
    cache_->x_hat.push_back(std::move(xh));
    out.push_back(std::move(y));
  }
  cache_->inv_std = std::move(inv_std);
  return out;
}

Tensor BatchNormLayer::infer(const Tensor& input) const {
  if (!primed()) {
    throw std::logic_error("BatchNorm: inference requested before any training step populated running statistics");
  }
  if (bn_feature_dim(input) != features()) {
    throw std::invalid_argument("BatchNorm: configured for " + std::to_string(features()) +
                                " features, input has " + std::to_string(bn_feature_dim(input)));
  }
  const std::size_t N = features();
  const std::size_t inner = input.rank() == 2 ? input.size(1) : 1;
  Tensor y(input.shape());
  for (std::size_t f = 0; f < N; ++f) {
    const double a = scale_[f] / std::sqrt(running_var_[f] + epsilon_);
    const double b = shift_[f] - a * running_mean_[f];
    const double* row = input.data() + f * inner;
    double* y_row = y.data() + f * inner;
    for (std::size_t j = 0; j < inner; ++j) y_row[j] = a * row[j] + b;
  }
  return y;
}

std::vector<Tensor> BatchNormLayer::backward(const std::vector<Tensor>& upstream) {
  require_cache(cache_->valid && cache_->x_hat.size() == upstream.size());
  const std::size_t N = features();
  const Tensor& first = upstream.front();
  const std::size_t inner = first.rank() == 2 ? first.size(1) : 1;
  const double m = static_cast<double>(cache_->group_size);

  // Parameter gradients are shared by both modes.
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    const Tensor& g = upstream[i];
    const Tensor& xh = cache_->x_hat[i];
    for (std::size_t f = 0; f < N; ++f) {
      const double* g_row = g.data() + f * inner;
      const double* xh_row = xh.data() + f * inner;
      double sg = 0.0, sgx = 0.0;
      for (std::size_t j = 0; j < inner; ++j) {
        sg += g_row[j];
        sgx += g_row[j] * xh_row[j];
      }
      shift_grad_[f] += sg;
      scale_grad_[f] += sgx;
    }
  }

  std::vector<Tensor> grads;
  grads.reserve(upstream.size());
  if (cache_->mode == Mode::kInfer) {
    for (const Tensor& g : upstream) {
      Tensor dx(g.shape());
      for (std::size_t f = 0; f < N; ++f) {
        const double a = scale_[f] * cache_->inv_std[f];
        const double* g_row = g.data() + f * inner;
        double* dx_row = dx.data() + f * inner;
        for (std::size_t j = 0; j < inner; ++j) dx_row[j] = a * g_row[j];
      }
      grads.push_back(std::move(dx));
    }
    return grads;
  }

  // Train mode: account for the dependence of batch statistics on the input.
  Tensor sum_dxh({N}), sum_dxh_xh({N});
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    const Tensor& g = upstream[i];
    const Tensor& xh = cache_->x_hat[i];
    for (std::size_t f = 0; f < N; ++f) {
      const double* g_row = g.data() + f * inner;
      const double* xh_row = xh.data() + f * inner;
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t j = 0; j < inner; ++j) {
        const double dxh = g_row[j] * scale_[f];
        s1 += dxh;
        s2 += dxh * xh_row[j];
      }
      sum_dxh[f] += s1;
      sum_dxh_xh[f] += s2;
    }
  }
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    const Tensor& g = upstream[i];
    const Tensor& xh = cache_->x_hat[i];
    Tensor dx(g.shape());
    for (std::size_t f = 0; f < N; ++f) {
      const double is = cache_->inv_std[f];
      const double mean_dxh = sum_dxh[f] / m;
      const double mean_dxh_xh = sum_dxh_xh[f] / m;
      const double* g_row = g.data() + f * inner;
      const double* xh_row = xh.data() + f * inner;
      double* dx_row = dx.data() + f * inner;
      for (std::size_t j = 0; j < inner; ++j) {
        const double dxh = g_row[j] * scale_[f];
        dx_row[j] = is * (dxh - mean_dxh - xh_row[j] * mean_dxh_xh);
      }
    }
    grads.push_back(std::move(dx));
  }
  return grads;
}

void BatchNormLayer::collect_params(std::vector<ParamRef>& out) {
  out.push_back({"batchnorm.scale", &scale_, &scale_grad_});
  out.push_back({"batchnorm.shift", &shift_, &shift_grad_});
}

// ---------------------------------------------------------------------------
// DropoutLayer

DropoutLayer::DropoutLayer(double keep_prob) : keep_prob_(keep_prob) {
  if (!(keep_prob_ > 0.0) || keep_prob_ > 1.0) {
    throw std::invalid_argument("Dropout: keep probability must lie in (0, 1]");
  }
}

Tensor DropoutLayer::infer(const Tensor& input) const { return input; }

std::vector<Tensor> DropoutLayer::forward(const std::vector<Tensor>& inputs, Mode mode, Rng* rng) {
  cached_masks_.clear();
  cached_ = true;
  if (mode == Mode::kInfer || keep_prob_ == 1.0) {
    return inputs;
  }
  if (rng == nullptr) {
    throw std::invalid_argument("Dropout: train mode needs a random source");
  }
  const double inv_keep = 1.0 / keep_prob_;
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& x : inputs) {
    Tensor mask(x.shape());
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
      mask[i] = rng->bernoulli(keep_prob_) ? inv_keep : 0.0;
      y[i] = x[i] * mask[i];
    }
    cached_masks_.push_back(std::move(mask));
    out.push_back(std::move(y));
  }
  return out;
}

std::vector<Tensor> DropoutLayer::backward(const std::vector<Tensor>& upstream) {
  require_cache(cached_);
  if (cached_masks_.empty()) {
    return upstream;  // identity forward
  }
  require_cache(cached_masks_.size() == upstream.size());
  std::vector<Tensor> grads;
  grads.reserve(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    Tensor g = upstream[i];
    const Tensor& mask = cached_masks_[i];
    for (std::size_t j = 0; j < g.numel(); ++j) g[j] *= mask[j];
    grads.push_back(std::move(g));
  }
  return grads;
}

// ---------------------------------------------------------------------------
// FlattenLayer

Tensor FlattenLayer::infer(const Tensor& input) const {
  return Tensor({input.numel()}, input.values());
}

std::vector<Tensor> FlattenLayer::forward(const std::vector<Tensor>& inputs, Mode, Rng*) {
  cached_shapes_.clear();
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& x : inputs) {
    cached_shapes_.push_back(x.shape());
    out.push_back(infer(x));
  }
  return out;
}

std::vector<Tensor> FlattenLayer::backward(const std::vector<Tensor>& upstream) {
  require_cache(cached_shapes_.size() == upstream.size() && !upstream.empty());
  std::vector<Tensor> grads;
  grads.reserve(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    grads.emplace_back(cached_shapes_[i], upstream[i].values());
  }
  return grads;
}

// ---------------------------------------------------------------------------
// DenseLayer

DenseLayer::DenseLayer(Tensor weights, Tensor bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rank() != 2) {
    throw std::invalid_argument("Dense: weights must be [out, in]");
  }
  if (bias_.rank() != 1 || bias_.size(0) != weights_.size(0)) {
    throw std::invalid_argument("Dense: bias shape " + shape_to_string(bias_.shape()) +
                                " does not match " + std::to_string(weights_.size(0)) + " outputs");
  }
  weight_grad_ = weights_.zeros_like();
  bias_grad_ = bias_.zeros_like();
}

Tensor DenseLayer::infer(const Tensor& input) const {
  if (input.rank() != 1 || input.size(0) != in_features()) {
    throw std::invalid_argument("Dense: expected input [" + std::to_string(in_features()) +
                                "], got " + shape_to_string(input.shape()));
  }
  const std::size_t O = out_features(), I = in_features();
  Tensor y({O});
  for (std::size_t o = 0; o < O; ++o) {
    const double* w_row = weights_.data() + o * I;
    double acc = bias_[o];
    for (std::size_t i = 0; i < I; ++i) acc += w_row[i] * input[i];
    y[o] = acc;
  }
  return y;
}

std::vector<Tensor> DenseLayer::forward(const std::vector<Tensor>& inputs, Mode, Rng*) {
  cached_inputs_ = inputs;
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& x : inputs) out.push_back(infer(x));
  return out;
}

std::vector<Tensor> DenseLayer::backward(const std::vector<Tensor>& upstream) {
  require_cache(cached_inputs_.size() == upstream.size() && !upstream.empty());
  const std::size_t O = out_features(), I = in_features();
  std::vector<Tensor> grads;
  grads.reserve(upstream.size());
  for (std::size_t n = 0; n < upstream.size(); ++n) {
    const Tensor& g = upstream[n];
    const Tensor& x = cached_inputs_[n];
    Tensor dx({I});
    for (std::size_t o = 0; o < O; ++o) {
      const double go = g[o];
      bias_grad_[o] += go;
      double* wg_row = weight_grad_.data() + o * I;
      const double* w_row = weights_.data() + o * I;
      for (std::size_t i = 0; i < I; ++i) {
        wg_row[i] += go * x[i];
        dx[i] += go * w_row[i];
      }
    }
    grads.push_back(std::move(dx));
  }
  return grads;
}

void DenseLayer::collect_params(std::vector<ParamRef>& out) {
  out.push_back({"dense.weights", &weights_, &weight_grad_});
  out.push_back({"dense.bias", &bias_, &bias_grad_});
}

}  // namespace icurisk
