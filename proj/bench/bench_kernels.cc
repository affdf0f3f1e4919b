// bench/bench_kernels.cc

// Copyright 2026  The emorec Authors

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

// Serial reference kernels against their OpenMP counterparts, plus a full
// forward/backward pass of the default network on both backends.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "emorec/kernels.h"
#include "emorec/net.h"
#include "emorec/vtlp.h"

namespace emorec {
namespace {

std::vector<Real> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Real> v(n);
  for (auto &x : v) x = g(rng);
  return v;
}

template <bool kParallel>
void BM_GemmNN(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<Real> c(n * n);
  for (auto _ : state) {
    if constexpr (kParallel)
      kernels::parallel::gemm_nn(n, n, n, a.data(), b.data(), c.data(), false);
    else
      kernels::serial::gemm_nn(n, n, n, a.data(), b.data(), c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_GemmNN<false>)->Name("gemm_nn/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_GemmNN<true>)->Name("gemm_nn/parallel")->Arg(64)->Arg(256)->Arg(512);

// First layer of the default network on a batch of 16 utterances.
kernels::ConvGeometry first_layer() {
  kernels::ConvGeometry g;
  g.in_channels = 1;
  g.out_channels = 16;
  g.kernel_t = g.kernel_f = 5;
  g.stride_t = 1;
  g.stride_f = 2;
  g.in_t = 40;
  g.in_f = 257;
  g.out_t = kernels::conv_out_extent(g.in_t, g.kernel_t, g.stride_t);
  g.out_f = kernels::conv_out_extent(g.in_f, g.kernel_f, g.stride_f);
  return g;
}

template <bool kParallel>
void BM_ConvForward(benchmark::State &state) {
  const kernels::ConvGeometry g = first_layer();
  const std::size_t batch = 16;
  const auto input = random_values(batch * g.in_size(), 3);
  const auto kernel = random_values(g.kernel_size(), 4);
  const auto bias = random_values(g.out_channels, 5);
  const std::vector<std::size_t> valid(batch, g.out_t);
  std::vector<Real> out(batch * g.out_size());
  for (auto _ : state) {
    if constexpr (kParallel)
      kernels::parallel::conv2d_forward(g, batch, input.data(), valid, kernel.data(), bias.data(), out.data());
    else
      kernels::serial::conv2d_forward(g, batch, input.data(), valid, kernel.data(), bias.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ConvForward<false>)->Name("conv2d_forward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<true>)->Name("conv2d_forward/parallel")->Unit(benchmark::kMillisecond);

template <bool kParallel>
void BM_ConvBackward(benchmark::State &state) {
  const kernels::ConvGeometry g = first_layer();
  const std::size_t batch = 16;
  const auto input = random_values(batch * g.in_size(), 6);
  const auto kernel = random_values(g.kernel_size(), 7);
  const auto d_out = random_values(batch * g.out_size(), 8);
  const std::vector<std::size_t> valid(batch, g.out_t);
  std::vector<Real> dk(g.kernel_size()), db(g.out_channels), dx(batch * g.in_size());
  for (auto _ : state) {
    if constexpr (kParallel)
      kernels::parallel::conv2d_backward(g, batch, input.data(), valid, kernel.data(), d_out.data(),
                                         dk.data(), db.data(), dx.data());
    else
      kernels::serial::conv2d_backward(g, batch, input.data(), valid, kernel.data(), d_out.data(),
                                       dk.data(), db.data(), dx.data());
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_ConvBackward<false>)->Name("conv2d_backward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Name("conv2d_backward/parallel")->Unit(benchmark::kMillisecond);

PaddedBatch default_batch() {
  Rng rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(24, 40);
  std::vector<Spectrogram> specs;
  std::vector<Emotion> labels;
  for (std::size_t i = 0; i < 16; ++i) {
    Spectrogram s;
    s.frames = len(rng);
    s.bins = 257;
    s.values.resize(s.frames * s.bins);
    for (auto &v : s.values) v = g(rng);
    specs.push_back(std::move(s));
    labels.push_back(kAllEmotions[i % kNumEmotions]);
  }
  return pad_batch(specs, labels);
}

void BM_TrainStep(benchmark::State &state) {
  const auto backend = state.range(0) == 0 ? kernels::Backend::kSerial : kernels::Backend::kParallel;
  const NetworkParams params = init_params(NetworkConfig::default_preset(), 1);
  const PaddedBatch batch = default_batch();
  for (auto _ : state) {
    const ForwardResult fr = forward(batch, params, {Mode::kTrain, backend});
    const BackwardResult br = backward(*fr.cache, params, batch.labels);
    benchmark::DoNotOptimize(br.loss);
  }
}
BENCHMARK(BM_TrainStep)->Name("train_step")->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EvalForward(benchmark::State &state) {
  const auto backend = state.range(0) == 0 ? kernels::Backend::kSerial : kernels::Backend::kParallel;
  const NetworkParams params = init_params(NetworkConfig::default_preset(), 1);
  const PaddedBatch batch = default_batch();
  for (auto _ : state) benchmark::DoNotOptimize(forward(batch, params, {Mode::kEval, backend}).logits.data.data());
}
BENCHMARK(BM_EvalForward)->Name("eval_forward")->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace emorec

BENCHMARK_MAIN();
