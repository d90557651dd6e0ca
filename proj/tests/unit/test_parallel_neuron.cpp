#include <cmath>

#include "doctest.h"
#include "pcsnn/activation.hpp"
#include "pcsnn/parallel_neuron.hpp"
#include "support.hpp"

using namespace pcsnn;
using testing::Rng;
using testing::t1;

namespace {

std::vector<int> column(const SpikeTrain& s, std::size_t unit) {
  std::vector<int> out;
  for (int x = 1; x <= s.steps(); ++x) out.push_back(s.fires(x, unit) ? 1 : 0);
  return out;
}

ParallelNeuronParams qcfs_params(float theta, int steps, float psi_da = 0.0f) {
  ParallelNeuronParams p;
  p.steps = steps;
  p.shift = shift_vector(Tensor::scalar(theta), Tensor::scalar(psi_da), steps);
  p.theta_pre = Tensor::scalar(theta);
  p.theta_post = Tensor::scalar(theta);
  return p;
}

}  // namespace

TEST_CASE("serial IF examples") {
  const auto run = serial_if_run(Tensor({4, 1}, 0.55f), 1.0f, 1.0, std::vector<double>{0.5});
  CHECK(column(run.spikes, 0) == std::vector<int>{1, 0, 1, 0});
  CHECK(run.spikes.count(0) == 2);
  CHECK(run.final_potential[0] == doctest::Approx(0.7).epsilon(1e-6));

  CHECK(serial_if_run(Tensor({5, 1}), 1.0f, 1.0, std::vector<double>{0.5}).spikes.total_spikes() == 0);

  const auto exact = serial_if_run(Tensor({1, 1}, 1.0f), 1.0f, 1.0, std::vector<double>{0.0});
  CHECK(exact.spikes.fires(1, 0));
  CHECK(exact.final_potential[0] == 0.0);

  CHECK_THROWS_AS((void)serial_if_run(Tensor({1, 1}), 0.0f, 1.0, std::vector<double>{0.0}), Error);
}

TEST_CASE("leaky serial run decays the membrane") {
  // v0 = 0.9, leak 0.5, no input: 0.45, 0.225, ... never fires.
  const auto run = serial_if_run(Tensor({3, 1}), 1.0f, 0.5, std::vector<double>{0.9});
  CHECK(run.spikes.total_spikes() == 0);
  CHECK(run.final_potential[0] == doctest::Approx(0.1125));
}

TEST_CASE("vanilla parallel neuron") {
  Rng rng(1);
  const Tensor current = testing::random_tensor(rng, {6, 5}, 0, 2);
  const SpikeTrain memoryless = vanilla_parallel_run(current, 0.0, 1.0f);
  for (int t = 0; t < 6; ++t)
    for (std::size_t u = 0; u < 5; ++u) CHECK(memoryless.fires(t + 1, u) == (current[t * 5 + u] >= 1.0f));

  // lambda = 1 with constant c: v_pre[t] = (t + 1) c, so it fires once (t + 1) c >= theta.
  const SpikeTrain integ = vanilla_parallel_run(Tensor({5, 1}, 0.3f), 1.0, 1.0f);
  CHECK(column(integ, 0) == std::vector<int>{0, 0, 0, 1, 1});

  const SpikeTrain single = vanilla_parallel_run(Tensor({1, 2}, {0.5f, 1.5f}), 0.7, 1.0f);
  CHECK(column(single, 0) == std::vector<int>{0});
  CHECK(column(single, 1) == std::vector<int>{1});
}

TEST_CASE("conversion coefficients and matrix") {
  const Tensor c = pc_coefficients(4);
  CHECK(c[0] == 1.0f);
  CHECK(c[1] == doctest::Approx(2.0 / 3.0));
  CHECK(c[2] == doctest::Approx(2.0 / 3.0));
  CHECK(c[3] == 1.0f);
  CHECK(pc_coefficients(1) == t1({1}));
  CHECK_THROWS_AS((void)pc_coefficients(0), Error);
  for (int t = 1; t <= 40; ++t) {
    const Tensor ct = pc_coefficients(t);
    CHECK(ct[0] == 1.0f);
    CHECK(ct[t - 1] == 1.0f);
  }

  const Tensor m = pc_matrix(3);
  CHECK(m.shape() == Shape{3, 3});
  for (int i = 0; i < 3; ++i) {
    CHECK(m[i] == doctest::Approx(1.0 / 3));
    CHECK(m[3 + i] == doctest::Approx(0.5));
    CHECK(m[6 + i] == 1.0f);
  }
  CHECK(pc_matrix(1) == Tensor({1, 1}, {1}));
}

TEST_CASE("conversion matrix is the post-matrix times the uniform projection") {
  // Row x of the product: c[x] * x / T, i.e. the coefficient times the
  // mean of the first x uniformized steps.
  for (int steps : {1, 2, 5, 9}) {
    const Tensor m = pc_matrix(steps);
    const Tensor c = pc_coefficients(steps);
    for (int x = 1; x <= steps; ++x) {
      const double fused = static_cast<double>(c[x - 1]) * x / steps;
      for (int i = 0; i < steps; ++i) CHECK(m[(x - 1) * steps + i] == doctest::Approx(fused).epsilon(1e-6));
    }
  }
}

TEST_CASE("shift vector") {
  const Tensor b = shift_vector(Tensor::scalar(1), Tensor::scalar(0), 4);
  CHECK(b.shape() == Shape{4});
  CHECK(b[0] == 0.125f);
  CHECK(b[1] == doctest::Approx(1.0 / 6));
  CHECK(b[2] == 0.25f);
  CHECK(b[3] == 0.5f);
  CHECK(shift_vector(Tensor::scalar(2), Tensor::scalar(0.3f), 1) == t1({1.3f}));

  const Tensor per = shift_vector(t1({1, 2}), t1({0.05f, 0}), 4);
  CHECK(per.shape() == Shape{4, 2});
  CHECK(per[3 * 2 + 0] == doctest::Approx(0.7));
  CHECK(per[3 * 2 + 1] == doctest::Approx(1.0));
  Rng rng(2);
  for (int steps = 1; steps <= 20; ++steps) {
    const auto theta = static_cast<float>(testing::uniform(rng, 0.1, 3));
    const auto da = static_cast<float>(testing::uniform(rng, -0.2, 0.2));
    const Tensor s = shift_vector(Tensor::scalar(theta), Tensor::scalar(da), steps);
    CHECK(s[steps - 1] == doctest::Approx(theta / 2.0 + da * steps).epsilon(1e-6));
    for (int x = 1; x <= steps; ++x) CHECK(s[x - 1] == doctest::Approx(s[steps - 1] / (steps - x + 1)).epsilon(1e-6));
  }
}

TEST_CASE("full firing path examples") {
  const auto p = qcfs_params(1.0f, 4);
  CHECK(column(pc_fire_full(Tensor({4, 1}, 0.425f), p), 0) == std::vector<int>{0, 0, 1, 1});
  CHECK(column(pc_fire_full(Tensor({4, 1}, 5.0f), p), 0) == std::vector<int>{1, 1, 1, 1});
  CHECK(column(pc_fire_full(Tensor({4, 1}), p), 0) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("fast firing path examples") {
  const auto p = qcfs_params(1.0f, 4);
  int evals = 0;
  CHECK(first_fire_step(1.7f, p, 0, evals) == 3);
  CHECK(evals == 2);

  const std::vector<float> sums{1.7f, -1.0f, 100.0f};
  const FastFire f = pc_fire_fast(sums, p);
  CHECK(f.first_fire == std::vector<int>{3, 5, 1});
  CHECK(column(f.spikes, 0) == std::vector<int>{0, 0, 1, 1});
  CHECK(column(f.spikes, 1) == std::vector<int>{0, 0, 0, 0});
  CHECK(column(f.spikes, 2) == std::vector<int>{1, 1, 1, 1});
  CHECK(f.spikes.first_fire(1) == 5);
}

TEST_CASE("mid-point probes stay within ceil(log2 T)") {
  // A unit that fires at step 1 is found by mid-point probes alone (T >= 2;
  // at T = 1 there is no probe and the single test is the terminal check).
  for (int steps = 2; steps <= 64; ++steps) {
    const auto p = qcfs_params(1.0f, steps);
    int evals = 0;
    CHECK(first_fire_step(1e6f, p, 0, evals) == 1);
    int bound = 0;
    while ((1 << bound) < steps) ++bound;
    CHECK(evals <= bound);
  }
}

TEST_CASE("rate readout") {
  const auto all = SpikeTrain::from_first_fire(4, {1});
  CHECK(rate_from_spikes(all, Tensor::scalar(1))[0] == 1.0f);
  const auto half = SpikeTrain::from_first_fire(4, {3});
  CHECK(rate_from_spikes(half, Tensor::scalar(1))[0] == 0.5f);
  Rng rng(3);
  std::vector<int> first(50);
  for (auto& f : first) f = 1 + static_cast<int>(rng() % 8);
  const auto s = SpikeTrain::from_first_fire(7, first);
  const Tensor r1 = rate_from_spikes(s, Tensor::scalar(1)), r2 = rate_from_spikes(s, Tensor::scalar(2));
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r2[i] == 2 * r1[i]);
}

TEST_CASE("spike train representations agree") {
  const auto lazy = SpikeTrain::from_first_fire(3, {1, 4, 2});
  const auto dense = SpikeTrain::from_bits(3, 3, {1, 0, 0, 1, 0, 1, 1, 0, 1});
  CHECK(lazy == dense);
  CHECK(dense.first_fire(1) == 4);
  CHECK(dense.total_spikes() == 5);
  CHECK(dense.is_sorted());
  CHECK_FALSE(SpikeTrain::from_bits(2, 1, {1, 0}).is_sorted());
}

TEST_CASE("params validation") {
  auto p = qcfs_params(1.0f, 4);
  CHECK_NOTHROW(p.validate());
  p.theta_post = Tensor::scalar(0);
  CHECK_THROWS_AS(p.validate(), Error);
  p = qcfs_params(1.0f, 4);
  p.shift = Tensor({3});
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("uniform input rate equals qcfs") {
  Rng rng(4);
  int compared = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int steps = 1 + trial % 64;
    const auto theta = static_cast<float>(testing::uniform(rng, 0.1, 4));
    const auto a = static_cast<float>(theta * testing::uniform(rng, -0.3, 1.3));
    if (level_boundary_distance(a, theta, steps, theta / 2.0) < 1e-6 * theta) continue;
    const auto p = qcfs_params(theta, steps);
    const Tensor rate = rate_from_spikes(pc_fire_full(Tensor({steps, 1}, a), p), p.theta_post);
    const Tensor q = qcfs(t1({a}), Tensor::scalar(theta), steps, Tensor::scalar(theta / 2));
    CHECK(rate[0] == q[0]);
    ++compared;
  }
  CHECK(compared > 9900);
}

TEST_CASE("per-channel parameters follow the unit's channel") {
  // Two channels, spatial 2: units 0,1 -> channel 0; 2,3 -> channel 1.
  ParallelNeuronParams p;
  p.steps = 2;
  p.shift = shift_vector(t1({1, 4}), t1({0, 0}), 2);
  p.theta_pre = t1({1, 4});
  p.theta_post = t1({1, 4});
  const std::vector<float> sums{1.0f, 1.0f, 1.0f, 1.0f};
  const FastFire f = pc_fire_fast(sums, p, 2);
  // Channel 0: 1/1 + 0.5 >= 1 fires at step 2 only; channel 1: 1 + 2 < 4 never.
  CHECK(f.first_fire == std::vector<int>{2, 2, 3, 3});
  CHECK(rate_from_spikes(f.spikes, p.theta_post, 2) == t1({0.5f, 0.5f, 0, 0}));
}
