#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pcsnn/converter.hpp"
#include "pcsnn/dataset.hpp"
#include "pcsnn/runtime.hpp"
#include "pcsnn/synth_model.hpp"
#include "support.hpp"

using namespace pcsnn;
using testing::Rng;
using testing::t1;

namespace {

LayerGraph qcfs_mlp(int levels, std::uint64_t seed, float theta = 1.0f) {
  SynthModelConfig cfg;
  cfg.levels = levels;
  cfg.depth = 3;
  cfg.width = 16;
  cfg.input_shape = {8};
  cfg.seed = seed;
  cfg.theta = theta;
  return make_synth_model(cfg);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("argmax and report invariants") {
  CHECK(argmax_rows(Tensor({2, 3}, {0, 2, 1, 5, 5, 1})) == std::vector<int>{1, 0});
  Rng rng(1);
  const auto net = convert_qcfs_exact(qcfs_mlp(4, 1));
  const auto rep = snn_parallel_forward(net, testing::random_tensor(rng, {20, 8}), 4);
  CHECK(rep.top1 == argmax_rows(rep.logits));
  CHECK(rep.firing_sparsity >= 0.0);
  CHECK(rep.firing_sparsity <= 1.0);
  CHECK_THROWS_AS((void)snn_parallel_forward(net, testing::random_tensor(rng, {2, 8}), 5), Error);
}

TEST_CASE("zero input through a zero-bias network") {
  SynthModelConfig cfg;
  cfg.bias_scale = 0.0f;
  cfg.input_shape = {8};
  cfg.width = 16;
  const LayerGraph g = make_synth_model(cfg);
  const Tensor zero({3, 8});
  CHECK(ann_forward(g, zero) == Tensor({3, 10}));
  const auto net = convert_qcfs_exact(g);
  for (Backend b : {Backend::Serial, Backend::ParallelFull, Backend::ParallelFast}) {
    RuntimeOptions ro;
    ro.backend = b;
    const auto rep = snn_forward(net, zero, net.steps, ro);
    CHECK(rep.spikes == 0);
    CHECK(rep.logits == Tensor({3, 10}));
  }
}

TEST_CASE("qcfs-eq SNN reproduces the QCFS network") {
  Rng rng(2);
  for (int levels : {1, 3, 8}) {
    const LayerGraph g = qcfs_mlp(levels, 10 + levels, 0.8f);
    const Tensor x = testing::random_tensor(rng, {64, 8});
    std::vector<double> gap(64, 1e9);
    const Tensor ann = ann_forward(g, x, [&](std::size_t, const ActivationSpec& s, const Tensor& pre) {
      const auto per = pre.size() / 64;
      for (std::size_t i = 0; i < pre.size(); ++i) {
        gap[i / per] = std::min(gap[i / per], level_boundary_distance(pre[i], s.theta[0], s.levels, s.psi[0]));
      }
    });
    const Tensor snn = snn_parallel_forward(convert_qcfs_exact(g), x, levels).logits;
    for (std::size_t n = 0; n < 64; ++n) {
      if (gap[n] < 1e-6 * 0.8) continue;
      for (std::size_t k = 0; k < 10; ++k) CHECK(std::abs(snn[n * 10 + k] - ann[n * 10 + k]) <= 1e-5 * std::abs(ann[n * 10 + k]));
    }
  }
}

TEST_CASE("one time step is a binarized pass") {
  Rng rng(3);
  const LayerGraph g = qcfs_mlp(1, 3);
  const auto net = convert_qcfs_exact(g);
  RuntimeOptions ro;
  ro.on_spikes = [](std::size_t, const SpikeTrain& s) { CHECK(s.steps() == 1); };
  const auto rep = snn_parallel_forward(net, testing::random_tensor(rng, {16, 8}), 1, ro);
  CHECK(rep.logits.shape() == Shape{16, 10});
}

TEST_CASE("output head is linear in the last post-threshold") {
  Rng rng(4);
  const auto net = convert_qcfs_exact(qcfs_mlp(4, 4));
  auto doubled = net;
  const auto last = doubled.graph.neuron_layers().back();
  auto& p = std::get<SpikingNeuron>(doubled.graph.layers[last].op).params;
  p.theta_post = Tensor::scalar(2.0f * p.theta_post[0]);
  const Tensor x = testing::random_tensor(rng, {10, 8});
  const Tensor a = snn_parallel_forward(net, x, 4).logits, b = snn_parallel_forward(doubled, x, 4).logits;
  const auto& bias = std::get<Linear>(net.graph.layers.back().op).bias;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((b[i] - bias[i % 10]) == doctest::Approx(2.0 * (a[i] - bias[i % 10])).epsilon(1e-5));
  }
}

TEST_CASE("full and fast backends are bit-identical") {
  Rng rng(5);
  SynthModelConfig cfg;
  cfg.arch = SynthArch::ResNet;
  cfg.depth = 2;
  cfg.width = 4;
  cfg.input_shape = {3, 6, 6};
  cfg.levels = 8;
  cfg.theta_jitter = 0.3f;
  const LayerGraph g = make_synth_model(cfg);
  const auto net = convert(init_da_params(g, 5), 5);
  const Tensor x = testing::random_tensor(rng, {6, 3, 6, 6});
  RuntimeOptions full;
  full.backend = Backend::ParallelFull;
  full.check_sorting = true;
  RuntimeOptions fast;
  const auto a = snn_parallel_forward(net, x, 5, full), b = snn_parallel_forward(net, x, 5, fast);
  CHECK(a.logits == b.logits);
  CHECK(a.spikes == b.spikes);
  CHECK(a.sorting_violations == 0);
}

TEST_CASE("firing sparsity counted two ways") {
  Rng rng(6);
  const auto net = convert_qcfs_exact(qcfs_mlp(6, 6));
  std::uint64_t bits = 0, cells = 0;
  RuntimeOptions ro;
  ro.record_rates = true;
  ro.on_spikes = [&](std::size_t, const SpikeTrain& s) {
    for (auto v : s.materialize()) bits += v;
    cells += s.units() * static_cast<std::uint64_t>(s.steps());
  };
  const auto rep = snn_parallel_forward(net, testing::random_tensor(rng, {12, 8}), 6, ro);
  CHECK(rep.spikes == bits);
  CHECK(rep.unit_steps == cells);
  CHECK(rep.firing_sparsity == static_cast<double>(bits) / static_cast<double>(cells));
  CHECK(rep.layer_rates.size() == 3);
}

TEST_CASE("worker threads do not change results") {
  Rng rng(7);
  const auto net = convert_qcfs_exact(qcfs_mlp(4, 7));
  const Tensor x = testing::random_tensor(rng, {13, 8});
  for (Backend b : {Backend::Serial, Backend::ParallelFast}) {
    RuntimeOptions one, many;
    one.backend = many.backend = b;
    many.threads = 4;
    const auto r1 = snn_forward(net, x, 4, one), r4 = snn_forward(net, x, 4, many);
    CHECK(r1.logits == r4.logits);
    CHECK(r1.spikes == r4.spikes);
  }
}

TEST_CASE("serial single neuron") {
  LayerGraph g;
  g.input_shape = {1};
  g.layers.push_back({"act", Activation{ActivationSpec::qcfs(Tensor::scalar(1), 4)}});
  const auto net = convert_qcfs_exact(g);
  RuntimeOptions ro;
  ro.backend = Backend::Serial;
  int count = -1;
  ro.on_spikes = [&](std::size_t, const SpikeTrain& s) { count = s.count(0); };
  const auto rep = snn_serial_forward(net, Tensor({1, 1}, 0.55f), 4, ro);
  CHECK(count == 2);
  CHECK(rep.logits[0] == 0.5f);
}

TEST_CASE("serial error shrinks as T grows") {
  SynthModelConfig cfg;
  cfg.activation = ActivationKind::ReLU;
  cfg.depth = 3;
  cfg.width = 32;
  cfg.input_shape = {16};
  const LayerGraph relu = make_synth_model(cfg);
  const Dataset data = synth_dataset(8, {16}, 10, 256);
  const LayerGraph clip = to_clip_relu(relu, record_thresholds(relu, data.batches(64)));
  const Tensor ref = ann_forward(clip, data.inputs);
  RuntimeOptions ro;
  ro.backend = Backend::Serial;
  double previous = 1e9;
  for (int steps : {8, 16, 32, 64}) {
    const Tensor out = snn_serial_forward(convert(init_da_params(clip, steps), steps), data.inputs, steps, ro).logits;
    std::vector<double> err;
    for (std::int64_t n = 0; n < 256; ++n) {
      double e = 0.0;
      for (std::int64_t k = 0; k < 10; ++k) e += std::abs(out[n * 10 + k] - ref[n * 10 + k]);
      err.push_back(e);
    }
    const double m = median(err);
    CHECK(m < previous);
    previous = m;
  }
}

TEST_CASE("evaluation metrics") {
  const LayerGraph g = qcfs_mlp(4, 9);
  const Dataset d = synth_dataset(9, {8}, 10, 300);
  const auto a = evaluate(g, d.inputs, d.labels);
  CHECK(agreement(a.predictions, a.predictions) == 1.0);
  CHECK(a.samples == 300);
  const auto s = evaluate(convert_qcfs_exact(g), d.inputs, d.labels);
  CHECK(s.predictions.size() == 300);

  // Constant predictor on uniform labels sits near chance.
  const Dataset big = synth_dataset(10, {2}, 10, 5000);
  const std::vector<int> zeros(5000, 0);
  const double acc = accuracy(zeros, big.labels);
  CHECK(std::abs(acc - 0.1) < 4 * std::sqrt(0.09 / 5000));

  CHECK_THROWS_AS((void)accuracy(std::vector<int>{}, std::vector<int>{}), Error);
  CHECK_THROWS_AS((void)evaluate(g, Tensor({0, 8}), std::vector<int>{}), Error);
}

TEST_CASE("bench reports one row per T") {
  Rng rng(11);
  const LayerGraph g = qcfs_mlp(4, 11);
  BenchConfig bc;
  bc.warmup = 0;
  bc.repeats = 1;
  const std::vector<int> steps{1, 8, 32};
  const auto rows = bench(g, testing::random_tensor(rng, {4, 8}), steps, bc);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].steps == steps[i]);
    CHECK(rows[i].ratio > 0.0);
    CHECK(rows[i].batch == 4);
  }
  CHECK(parse_backend("parallel-full") == Backend::ParallelFull);
  CHECK_THROWS_AS((void)parse_backend("gpu"), Error);
}
