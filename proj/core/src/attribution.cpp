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

#include "icurisk/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace icurisk {

namespace {

double relu_fn(double x) { return x > 0.0 ? x : 0.0; }

// Elementwise net delta at a tap.
Tensor net_delta(const Tensor& pos, const Tensor& neg) {
  Tensor d = pos;
  for (std::size_t j = 0; j < d.numel(); ++j) d[j] += neg[j];
  return d;
}

struct Split {
  Tensor pos, neg;
};

// --- forward delta propagation (one layer) ---------------------------------

Split conv_delta(const MultiScaleConv1dLayer& layer, const Tensor& dx, std::size_t out_time) {
  const std::size_t C = dx.size(0), T = dx.size(1);
  Split out{Tensor({layer.total_filters(), out_time}), Tensor({layer.total_filters(), out_time})};
  std::size_t row = 0;
  for (const Conv1d& b : layer.branches()) {
    const long long off = b.input_offset();
    const std::size_t F = b.filters(), W = b.width();
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t t = 0; t < out_time; ++t) {
        double pos = 0.0, neg = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t w = 0; w < W; ++w) {
            const long long tau = static_cast<long long>(t) + static_cast<long long>(w) + off;
            if (tau < 0 || tau >= static_cast<long long>(T)) continue;
            const double s = b.kernels().at(f, c, w) * dx.at(c, static_cast<std::size_t>(tau));
            (s > 0.0 ? pos : neg) += s;
          }
        }
        out.pos.at(row + f, t) = pos;
        out.neg.at(row + f, t) = neg;
      }
    }
    row += F;
  }
  return out;
}

Split dense_delta(const DenseLayer& layer, const Tensor& dx) {
  const std::size_t O = layer.out_features(), I = layer.in_features();
  Split out{Tensor({O}), Tensor({O})};
  for (std::size_t o = 0; o < O; ++o) {
    const double* w = layer.weights().data() + o * I;
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
      const double s = w[i] * dx[i];
      (s > 0.0 ? pos : neg) += s;
    }
    out.pos[o] = pos;
    out.neg[o] = neg;
  }
  return out;
}

Split pool_delta(const AvgPool1dLayer& layer, const Tensor& dx) {
  const std::size_t C = dx.size(0), T = dx.size(1);
  const std::size_t To = layer.output_time(T);
  const double inv = 1.0 / static_cast<double>(layer.window());
  Split out{Tensor({C, To}), Tensor({C, To})};
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < To; ++t) {
      double pos = 0.0, neg = 0.0;
      for (std::size_t k = 0; k < layer.window(); ++k) {
        const double s = dx.at(c, t * layer.stride() + k) * inv;
        (s > 0.0 ? pos : neg) += s;
      }
      out.pos.at(c, t) = pos;
      out.neg.at(c, t) = neg;
    }
  }
  return out;
}

std::vector<double> bn_inference_slopes(const BatchNormLayer& bn) {
  std::vector<double> a(bn.features());
  for (std::size_t f = 0; f < a.size(); ++f) {
    a[f] = bn.scale()[f] / std::sqrt(bn.running_var()[f] + bn.epsilon());
  }
  return a;
}

Split bn_delta(const BatchNormLayer& bn, const Tensor& dx) {
  const std::vector<double> a = bn_inference_slopes(bn);
  const std::size_t inner = dx.rank() == 2 ? dx.size(1) : 1;
  Split out{dx.zeros_like(), dx.zeros_like()};
  for (std::size_t f = 0; f < bn.features(); ++f) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t idx = f * inner + j;
      const double s = a[f] * dx[idx];
      (s > 0.0 ? out.pos[idx] : out.neg[idx]) = s;
    }
  }
  return out;
}

Split reveal_cancel_delta(const std::function<double(double)>& f, const Tensor& x0,
                          const Tensor& dp, const Tensor& dn) {
  Split out{dp.zeros_like(), dp.zeros_like()};
  for (std::size_t j = 0; j < dp.numel(); ++j) {
    const double r = x0[j];
    const double p = dp[j], n = dn[j];
    out.pos[j] = 0.5 * (f(r + p) - f(r)) + 0.5 * (f(r + n + p) - f(r + n));
    out.neg[j] = 0.5 * (f(r + n) - f(r)) + 0.5 * (f(r + p + n) - f(r + p));
  }
  return out;
}

// --- backward multiplier propagation (one layer) ----------------------------

Split conv_multipliers(const MultiScaleConv1dLayer& layer, const Tensor& dx, const Split& up) {
  const std::size_t C = dx.size(0), T = dx.size(1);
  const std::size_t To = up.pos.size(1);
  Split down{Tensor({C, T}), Tensor({C, T})};
  std::size_t row = 0;
  for (const Conv1d& b : layer.branches()) {
    const long long off = b.input_offset();
    const std::size_t F = b.filters(), W = b.width();
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t t = 0; t < To; ++t) {
        const double mp = up.pos.at(row + f, t);
        const double mn = up.neg.at(row + f, t);
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t w = 0; w < W; ++w) {
            const long long tau = static_cast<long long>(t) + static_cast<long long>(w) + off;
            if (tau < 0 || tau >= static_cast<long long>(T)) continue;
            const std::size_t ti = static_cast<std::size_t>(tau);
            const double k = b.kernels().at(f, c, w);
            const double s = k * dx.at(c, ti);
            if (s == 0.0) continue;
            const double m = k * (s > 0.0 ? mp : mn);
            down.pos.at(c, ti) += m;
            down.neg.at(c, ti) += m;
          }
        }
      }
    }
    row += F;
  }
  return down;
}

Split dense_multipliers(const DenseLayer& layer, const Tensor& dx, const Split& up) {
  const std::size_t O = layer.out_features(), I = layer.in_features();
  Split down{Tensor({I}), Tensor({I})};
  for (std::size_t o = 0; o < O; ++o) {
    const double* w = layer.weights().data() + o * I;
    const double mp = up.pos[o], mn = up.neg[o];
    for (std::size_t i = 0; i < I; ++i) {
      const double s = w[i] * dx[i];
      if (s == 0.0) continue;
      const double m = w[i] * (s > 0.0 ? mp : mn);
      down.pos[i] += m;
      down.neg[i] += m;
    }
  }
  return down;
}

Split pool_multipliers(const AvgPool1dLayer& layer, const Tensor& dx, const Split& up) {
  const std::size_t C = dx.size(0), T = dx.size(1);
  const std::size_t To = up.pos.size(1);
  const double inv = 1.0 / static_cast<double>(layer.window());
  Split down{Tensor({C, T}), Tensor({C, T})};
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < To; ++t) {
      const double mp = up.pos.at(c, t), mn = up.neg.at(c, t);
      for (std::size_t k = 0; k < layer.window(); ++k) {
        const std::size_t ti = t * layer.stride() + k;
        const double s = dx.at(c, ti);
        if (s == 0.0) continue;
        const double m = inv * (s > 0.0 ? mp : mn);
        down.pos.at(c, ti) += m;
        down.neg.at(c, ti) += m;
      }
    }
  }
  return down;
}

Split bn_multipliers(const BatchNormLayer& bn, const Tensor& dx, const Split& up) {
  const std::vector<double> a = bn_inference_slopes(bn);
  const std::size_t inner = dx.rank() == 2 ? dx.size(1) : 1;
  Split down{dx.zeros_like(), dx.zeros_like()};
  for (std::size_t f = 0; f < bn.features(); ++f) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t idx = f * inner + j;
      const double s = a[f] * dx[idx];
      if (s == 0.0) continue;
      const double m = a[f] * (s > 0.0 ? up.pos[idx] : up.neg[idx]);
      down.pos[idx] = m;
      down.neg[idx] = m;
    }
  }
  return down;
}

Split reveal_cancel_multipliers(const Tensor& dp, const Tensor& dn, const Tensor& dyp,
                                const Tensor& dyn, const Split& up) {
  Split down{dp.zeros_like(), dp.zeros_like()};
  for (std::size_t j = 0; j < dp.numel(); ++j) {
    // Zero-delta convention: an exactly-zero input delta contributes nothing.
    down.pos[j] = dp[j] == 0.0 ? 0.0 : (dyp[j] / dp[j]) * up.pos[j];
    down.neg[j] = dn[j] == 0.0 ? 0.0 : (dyn[j] / dn[j]) * up.neg[j];
  }
  return down;
}

Split reshape_split(Split s, const std::vector<std::size_t>& shape) {
  return Split{Tensor(shape, std::move(s.pos.values())), Tensor(shape, std::move(s.neg.values()))};
}

}  // namespace

Tensor zero_reference(std::size_t channels, std::size_t time) {
  return Tensor({channels, time});
}

DeltaState forward_pair(const Network& network, const Tensor& input, const Tensor& reference,
                        OutputTarget target) {
  require_same_shape(input, reference, "forward_pair");
  const std::size_t end = network.target_end(target);
  if (end == 0) throw std::invalid_argument("forward_pair: empty network");

  DeltaState st;
  st.end = end;
  st.actual = network.collect_taps(input, end);
  st.reference = network.collect_taps(reference, end);

  Tensor dp0 = input.zeros_like(), dn0 = input.zeros_like();
  for (std::size_t j = 0; j < input.numel(); ++j) {
    const double d = input[j] - reference[j];
    (d > 0.0 ? dp0[j] : dn0[j]) = d;
  }
  st.delta_pos.push_back(std::move(dp0));
  st.delta_neg.push_back(std::move(dn0));

  for (std::size_t i = 0; i < end; ++i) {
    const Layer& layer = network.layer(i);
    const Tensor dx = net_delta(st.delta_pos[i], st.delta_neg[i]);
    Split out;
    switch (layer.kind()) {
      case LayerKind::kMultiScaleConv1d:
        out = conv_delta(static_cast<const MultiScaleConv1dLayer&>(layer), dx,
                         st.actual[i + 1].size(1));
        break;
      case LayerKind::kDense:
        out = dense_delta(static_cast<const DenseLayer&>(layer), dx);
        break;
      case LayerKind::kAvgPool1d:
        out = pool_delta(static_cast<const AvgPool1dLayer&>(layer), dx);
        break;
      case LayerKind::kBatchNorm:
        out = bn_delta(static_cast<const BatchNormLayer&>(layer), dx);
        break;
      case LayerKind::kRelu:
        out = reveal_cancel_delta(relu_fn, st.reference[i], st.delta_pos[i], st.delta_neg[i]);
        break;
      case LayerKind::kSigmoid:
        out = reveal_cancel_delta([](double x) { return sigmoid(x); }, st.reference[i],
                                  st.delta_pos[i], st.delta_neg[i]);
        break;
      case LayerKind::kDropout:
        out = Split{st.delta_pos[i], st.delta_neg[i]};
        break;
      case LayerKind::kFlatten:
        out = reshape_split(Split{st.delta_pos[i], st.delta_neg[i]}, st.actual[i + 1].shape());
        break;
    }
    st.delta_pos.push_back(std::move(out.pos));
    st.delta_neg.push_back(std::move(out.neg));
  }
  return st;
}

Multipliers input_multipliers(const Network& network, const DeltaState& state) {
  if (state.actual.back().numel() != 1) {
    throw std::invalid_argument("input_multipliers: target activation must be a single value");
  }
  Split m{Tensor({1}), Tensor({1})};
  m.pos[0] = 1.0;
  m.neg[0] = 1.0;

  for (std::size_t i = state.end; i-- > 0;) {
    const Layer& layer = network.layer(i);
    const Tensor dx = net_delta(state.delta_pos[i], state.delta_neg[i]);
    switch (layer.kind()) {
      case LayerKind::kMultiScaleConv1d:
        m = conv_multipliers(static_cast<const MultiScaleConv1dLayer&>(layer), dx, m);
        break;
      case LayerKind::kDense:
        m = dense_multipliers(static_cast<const DenseLayer&>(layer), dx, m);
        break;
      case LayerKind::kAvgPool1d:
        m = pool_multipliers(static_cast<const AvgPool1dLayer&>(layer), dx, m);
        break;
      case LayerKind::kBatchNorm:
        m = bn_multipliers(static_cast<const BatchNormLayer&>(layer), dx, m);
        break;
      case LayerKind::kRelu:
      case LayerKind::kSigmoid:
        m = reveal_cancel_multipliers(state.delta_pos[i], state.delta_neg[i],
                                      state.delta_pos[i + 1], state.delta_neg[i + 1], m);
        break;
      case LayerKind::kDropout:
        break;  // identity at inference
      case LayerKind::kFlatten:
        m = reshape_split(std::move(m), state.actual[i].shape());
        break;
    }
  }
  return Multipliers{std::move(m.pos), std::move(m.neg)};
}

AttributionMap attribute(const Network& network, const Tensor& input, const Tensor& reference,
                         OutputTarget target) {
  const DeltaState state = forward_pair(network, input, reference, target);
  const Multipliers m = input_multipliers(network, state);

  AttributionMap map;
  map.target = target;
  map.contributions = input.zeros_like();
  double total = 0.0;
  for (std::size_t j = 0; j < input.numel(); ++j) {
    map.contributions[j] =
        m.pos[j] * state.delta_pos.front()[j] + m.neg[j] * state.delta_neg.front()[j];
    total += map.contributions[j];
  }
  map.actual_output = state.actual.back()[0];
  map.reference_output = state.reference.back()[0];
  map.delta = map.actual_output - map.reference_output;
  map.additivity_residual = std::abs(total - map.delta);
  return map;
}

LinearRuleResult linear_rule(std::span<const double> weights, std::span<const double> dx_pos,
                             std::span<const double> dx_neg) {
  if (weights.size() != dx_pos.size() || weights.size() != dx_neg.size()) {
    throw std::invalid_argument("linear_rule: weight and delta lengths differ");
  }
  LinearRuleResult r;
  r.per_input.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double dx = dx_pos[i] + dx_neg[i];
    const double s = weights[i] * dx;
    LinearContribution& c = r.per_input[i];
    if (s > 0.0) {
      c.pos_to_dy_pos = weights[i] * dx_pos[i];
      c.neg_to_dy_pos = weights[i] * dx_neg[i];
      r.dy_pos += s;
    } else if (s < 0.0) {
      c.pos_to_dy_neg = weights[i] * dx_pos[i];
      c.neg_to_dy_neg = weights[i] * dx_neg[i];
      r.dy_neg += s;
    }
  }
  return r;
}

RevealCancelResult reveal_cancel(const std::function<double(double)>& f, double x0, double dx_pos,
                                 double dx_neg) {
  RevealCancelResult r;
  r.dy_pos = 0.5 * (f(x0 + dx_pos) - f(x0)) + 0.5 * (f(x0 + dx_neg + dx_pos) - f(x0 + dx_neg));
  r.dy_neg = 0.5 * (f(x0 + dx_neg) - f(x0)) + 0.5 * (f(x0 + dx_pos + dx_neg) - f(x0 + dx_pos));
  r.m_pos = dx_pos == 0.0 ? 0.0 : r.dy_pos / dx_pos;
  r.m_neg = dx_neg == 0.0 ? 0.0 : r.dy_neg / dx_neg;
  return r;
}

SampledShapleyResult sampled_shapley(const std::function<double(const Tensor&)>& f,
                                     const Tensor& input, const Tensor& reference,
                                     const GroupPartition& groups, int n_samples, Rng& rng) {
  require_same_shape(input, reference, "sampled_shapley");
  validate_group_partition(groups, input.numel());
  if (n_samples < 1) throw std::invalid_argument("sampled_shapley: need n_samples >= 1");

  const std::size_t n_groups = groups.size();
  std::vector<double> mean(n_groups, 0.0), m2(n_groups, 0.0);
  std::vector<std::size_t> order(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) order[g] = g;

  const double base = f(reference);
  for (int s = 0; s < n_samples; ++s) {
    rng.shuffle(order);
    Tensor hybrid = reference;
    double prev = base;
    for (std::size_t g : order) {
      for (std::size_t idx : groups[g]) hybrid[idx] = input[idx];
      const double cur = f(hybrid);
      const double marginal = cur - prev;
      prev = cur;
      // Welford over permutation samples.
      const double d = marginal - mean[g];
      mean[g] += d / static_cast<double>(s + 1);
      m2[g] += d * (marginal - mean[g]);
    }
  }

  SampledShapleyResult out;
  out.n_samples = n_samples;
  out.values = std::move(mean);
  out.std_error.assign(n_groups, 0.0);
  if (n_samples > 1) {
    for (std::size_t g = 0; g < n_groups; ++g) {
      out.std_error[g] = std::sqrt(m2[g] / (static_cast<double>(n_samples) *
                                            static_cast<double>(n_samples - 1)));
    }
  }
  return out;
}

}  // namespace icurisk
