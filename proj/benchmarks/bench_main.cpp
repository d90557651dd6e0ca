#include <benchmark/benchmark.h>

#include <random>

#include "pcsnn/converter.hpp"
#include "pcsnn/numeric.hpp"
#include "pcsnn/parallel_neuron.hpp"
#include "pcsnn/runtime.hpp"
#include "pcsnn/synth_model.hpp"

namespace {

using namespace pcsnn;

constexpr std::int64_t kUnits = 4096;
constexpr std::int64_t kChannels = 64;

Tensor uniform_tensor(Shape shape, float lo, float hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

ParallelNeuronParams relu_params(int steps) {
  const Tensor theta = uniform_tensor({kChannels}, 0.5f, 2.0f, 1);
  Tensor half({kChannels});
  for (std::int64_t c = 0; c < kChannels; ++c) half[c] = theta[c] / 2;
  ParallelNeuronParams p;
  p.steps = steps;
  p.shift = shift_vector(theta, half, Tensor({kChannels}), steps);
  p.theta_pre = theta;
  p.theta_post = theta;
  return p;
}

void BM_FireFull(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  const auto p = relu_params(steps);
  const Tensor current = uniform_tensor({steps, kUnits}, -0.5f, 2.5f, 2);
  for (auto _ : state) benchmark::DoNotOptimize(pc_fire_full(current, p, kUnits / kChannels));
  state.SetItemsProcessed(state.iterations() * kUnits);
}
BENCHMARK(BM_FireFull)->RangeMultiplier(2)->Range(1, 64);

void BM_FireFast(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  const auto p = relu_params(steps);
  const Tensor sums = uniform_tensor({kUnits}, -0.5f * steps, 2.5f * steps, 3);
  for (auto _ : state) benchmark::DoNotOptimize(pc_fire_fast(sums.data(), p, kUnits / kChannels));
  state.SetItemsProcessed(state.iterations() * kUnits);
}
BENCHMARK(BM_FireFast)->RangeMultiplier(2)->Range(1, 64);

void BM_Conv2d(benchmark::State& state) {
  const auto c = state.range(0);
  const Tensor x = uniform_tensor({8, c, 16, 16}, -1, 1, 4);
  const Tensor w = uniform_tensor({c, c, 3, 3}, -0.1f, 0.1f, 5);
  const Tensor b = uniform_tensor({c}, -0.1f, 0.1f, 6);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, 1, 1));
}
BENCHMARK(BM_Conv2d)->Arg(8)->Arg(32);

ConvertedNetwork vgg_network(int steps) {
  SynthModelConfig cfg;
  cfg.arch = SynthArch::VGG;
  cfg.depth = 4;
  cfg.width = 8;
  cfg.input_shape = {3, 16, 16};
  cfg.activation = ActivationKind::QCFS;
  return convert(init_da_params(make_synth_model(cfg), steps), steps);
}

template <Backend B>
void BM_Forward(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  const auto net = vgg_network(steps);
  const Tensor x = uniform_tensor({8, 3, 16, 16}, -1, 1, 7);
  RuntimeOptions opt;
  opt.backend = B;
  for (auto _ : state) benchmark::DoNotOptimize(snn_forward(net, x, steps, opt));
}
BENCHMARK(BM_Forward<Backend::Serial>)->Name("BM_ForwardSerial")->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forward<Backend::ParallelFull>)->Name("BM_ForwardParallelFull")->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forward<Backend::ParallelFast>)->Name("BM_ForwardParallelFast")->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
