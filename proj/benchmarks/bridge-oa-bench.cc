// benchmarks/bridge-oa-bench.cc

// Copyright 2026  The bridge-oa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Micro benchmarks for the hot paths: features, the bridging network,
// blending and scoring.

#include <random>

#include <benchmark/benchmark.h>

#include "bridge_oa/audio.h"
#include "bridge_oa/features.h"
#include "bridge_oa/nnet.h"
#include "bridge_oa/supervision.h"

namespace bridge_oa {
namespace {

Waveform noise(double seconds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  Waveform w;
  w.sample_rate = kDefaultSampleRate;
  w.samples.resize(static_cast<std::size_t>(seconds * w.sample_rate));
  for (double &s : w.samples) s = g(rng);
  return w;
}

void BM_Fbank(benchmark::State &state) {
  Waveform w = noise(state.range(0) / 100.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fbank(w));
  state.SetItemsProcessed(state.iterations() * w.samples.size());
}
BENCHMARK(BM_Fbank)->Arg(100)->Arg(1000);  // centiseconds of audio

void BM_OaBlend(benchmark::State &state) {
  Waveform x = noise(10.0, 2), y = noise(10.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(oa_blend(x, y, 0.3));
  state.SetItemsProcessed(state.iterations() * x.samples.size());
}
BENCHMARK(BM_OaBlend);

ModelConfig bench_model(int channels) {
  if (channels == 16) return ModelConfig::tiny();
  ModelConfig cfg;
  cfg.conv_channels = channels;
  return cfg;
}

void BM_Forward(benchmark::State &state) {
  const ModelConfig cfg = bench_model(state.range(0));
  const Parameters p = init_params(cfg, 1);
  FeatureMatrix f = fbank(noise(state.range(1) / 100.0, 4));
  for (auto _ : state) benchmark::DoNotOptimize(forward(f, f, p, cfg));
}
BENCHMARK(BM_Forward)->Args({16, 100})->Args({256, 100})->Args({256, 500});

void BM_ForwardBackward(benchmark::State &state) {
  const ModelConfig cfg = bench_model(state.range(0));
  const Parameters p = init_params(cfg, 1);
  FeatureMatrix f = fbank(noise(1.0, 5));
  Parameters grads = make_parameter_layout(cfg);
  const Eigen::VectorXd d_logits = Eigen::VectorXd::Constant(cfg.logits_dim, 0.1);
  for (auto _ : state) {
    ForwardCache cache;
    forward(f, f, p, cfg, &cache);
    backward(cache, p, cfg, d_logits, 0.1, &grads);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(256);

void BM_Wer(benchmark::State &state) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> word(0, 50);
  Transcript ref, hyp;
  for (int i = 0; i < state.range(0); ++i) {
    ref.words.push_back("w" + std::to_string(word(rng)));
    hyp.words.push_back("w" + std::to_string(word(rng)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(wer(ref, hyp));
}
BENCHMARK(BM_Wer)->Arg(20)->Arg(200);

void BM_LossRi(benchmark::State &state) {
  std::vector<double> l(11), w(11);
  for (int i = 0; i < 11; ++i) l[i] = 0.1 * i, w[i] = 0.05 * (10 - i);
  Eigen::VectorXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(loss_ri(l, w, &grad));
}
BENCHMARK(BM_LossRi);

}  // namespace
}  // namespace bridge_oa

BENCHMARK_MAIN();
