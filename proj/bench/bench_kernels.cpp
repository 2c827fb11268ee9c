// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "propnet/kernels.hpp"
#include "propnet/random.hpp"

using namespace propnet;

namespace {

Tensor3 random_tensor(int c, int h, int w) {
  Rng rng(1);
  Tensor3 t(c, h, w);
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

ConvSpec random_conv(int in, int out, int k) {
  Rng rng(2);
  ConvSpec conv(in, out, k);
  for (double& v : conv.weight) v = rng.uniform(-0.1, 0.1);
  for (double& v : conv.bias) v = rng.uniform(-0.1, 0.1);
  return conv;
}

const std::vector<double> kTaps{0.25, 0.5, 0.25};

void BM_conv2d_reference(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1));
  const Tensor3 in = random_tensor(ch, 64, 64);
  const ConvSpec conv = random_conv(ch, ch, k);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::conv2d_reference(in, conv));
}

void BM_conv2d(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1));
  const Tensor3 in = random_tensor(ch, 64, 64);
  const ConvSpec conv = random_conv(ch, ch, k);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::conv2d(in, conv));
}

void BM_blur_downsample_reference(benchmark::State& state) {
  const Tensor3 in = random_tensor(static_cast<int>(state.range(0)), 64, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::blur_downsample_reference(in, kTaps, Padding::reflect));
  }
}

void BM_blur_downsample(benchmark::State& state) {
  const Tensor3 in = random_tensor(static_cast<int>(state.range(0)), 64, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::blur_downsample(in, kTaps, Padding::reflect));
  }
}

}  // namespace

BENCHMARK(BM_conv2d_reference)->Args({8, 7})->Args({32, 3})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d)->Args({8, 7})->Args({32, 3})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_blur_downsample_reference)->Arg(32)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_blur_downsample)->Arg(32)->Arg(256)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
