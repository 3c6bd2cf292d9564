// Copyright 2026 The icurisk Authors. Apache-2.0.

#include <benchmark/benchmark.h>

#include "icurisk/attribution.hpp"
#include "icurisk/network.hpp"
#include "icurisk/shapley.hpp"
#include "icurisk/rng.hpp"

namespace {

using namespace icurisk;

Tensor random_grid(std::size_t channels, std::size_t time, Rng& rng) {
  Tensor t({channels, time});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
  return t;
}

Network primed_default_model(std::uint64_t seed) {
  ModelConfig config;
  config.seed = seed;
  Network net = build_model(config);
  Rng rng(seed + 1);
  std::vector<Tensor> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(random_grid(22, 48, rng));
  net.forward(batch, Mode::kTrain, &rng, net.logit_end());
  return net;
}

void BM_PredictDefaultModel(benchmark::State& state) {
  Network net = primed_default_model(3);
  Rng rng(7);
  const Tensor x = random_grid(22, 48, rng);
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(x));
}
BENCHMARK(BM_PredictDefaultModel);

void BM_TrainStepBatch32(benchmark::State& state) {
  ModelConfig config;
  config.seed = 3;
  Network net = build_model(config);
  Rng rng(7);
  std::vector<Tensor> batch;
  for (int i = 0; i < 32; ++i) batch.push_back(random_grid(22, 48, rng));
  const std::size_t end = net.logit_end();
  for (auto _ : state) {
    auto logits = net.forward(batch, Mode::kTrain, &rng, end);
    std::vector<Tensor> grads;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      Tensor g({1});
      g[0] = 1.0 / 32.0;
      grads.push_back(g);
    }
    net.zero_grads();
    benchmark::DoNotOptimize(net.backward(grads, end));
  }
}
BENCHMARK(BM_TrainStepBatch32);

void BM_Attribute(benchmark::State& state) {
  Network net = primed_default_model(3);
  Rng rng(11);
  const Tensor x = random_grid(22, 48, rng);
  const Tensor ref = zero_reference(22, 48);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attribute(net, x, ref, OutputTarget::kLogit));
  }
}
BENCHMARK(BM_Attribute);

void BM_ExactShapley(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(5);
  std::vector<double> table(1u << n);
  for (double& v : table) v = rng.normal();
  table[0] = 0.0;
  CoalitionalGame game{n, [&](std::uint32_t mask) { return table[mask]; }};
  for (auto _ : state) benchmark::DoNotOptimize(exact_shapley(game));
}
BENCHMARK(BM_ExactShapley)->Arg(10)->Arg(14);

}  // namespace

BENCHMARK_MAIN();
