#include <algorithm>

#include "doctest.h"
#include "pcsnn/numeric.hpp"
#include "support.hpp"

using namespace pcsnn;
using testing::close;
using testing::random_tensor;
using testing::Rng;

namespace {

// Straightforward six-loop reference convolution.
Tensor conv_reference(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const auto n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const auto co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const auto oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  Tensor y({n, co, oh, ow});
  for (std::int64_t s = 0; s < n; ++s)
    for (std::int64_t o = 0; o < co; ++o)
      for (std::int64_t r = 0; r < oh; ++r)
        for (std::int64_t c = 0; c < ow; ++c) {
          double acc = b[o];
          for (std::int64_t i = 0; i < ci; ++i)
            for (std::int64_t u = 0; u < kh; ++u)
              for (std::int64_t v = 0; v < kw; ++v) {
                const auto yy = r * stride + u - pad, xx = c * stride + v - pad;
                if (yy < 0 || xx < 0 || yy >= h || xx >= wd) continue;
                acc += static_cast<double>(w[((o * ci + i) * kh + u) * kw + v]) * x[((s * ci + i) * h + yy) * wd + xx];
              }
          y[((s * co + o) * oh + r) * ow + c] = static_cast<float>(acc);
        }
  return y;
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t({2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(numel({2, 3, 4}) == 24);
  CHECK(numel({}) == 1);
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS((void)t.reshaped({4}), Error);
  CHECK_THROWS_AS(Tensor({2}, std::vector<float>{1, 2, 3}), Error);
  CHECK(spatial_size({5, 3, 4, 4}) == 16);
  CHECK(spatial_size({5, 3}) == 1);
  CHECK(Tensor::scalar(2.0f).rank() == 0);
}

TEST_CASE("linear examples") {
  CHECK(linear(Tensor({1, 2}, {1, 2}), Tensor({2, 2}, {1, 0, 0, 1}), testing::t1({0, 0})) == Tensor({1, 2}, {1, 2}));
  CHECK(linear(Tensor({1, 2}, {1, 1}), Tensor({1, 2}, {2, 3}), testing::t1({1})) == Tensor({1, 1}, {6}));
  Rng rng(3);
  const Tensor w = random_tensor(rng, {4, 2});
  const Tensor b = random_tensor(rng, {4});
  CHECK(linear(Tensor({1, 2}), w, b).values() == b.values());
}

TEST_CASE("linear shape errors name both shapes") {
  try {
    (void)linear(Tensor({1, 3}), Tensor({2, 2}), Tensor({2}));
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[1,3]") != std::string::npos);
    CHECK(msg.find("[2,2]") != std::string::npos);
  }
}

TEST_CASE("conv2d examples") {
  CHECK(conv2d(Tensor({1, 1, 3, 3}, 1.0f), Tensor({1, 1, 3, 3}, 1.0f), testing::t1({0}), 1, 0) ==
        Tensor({1, 1, 1, 1}, {9}));
  CHECK(conv2d(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), Tensor({1, 1, 2, 2}, {1, 0, 0, 1}), testing::t1({0}), 1, 0) ==
        Tensor({1, 1, 1, 1}, {5}));
  Rng rng(4);
  const Tensor x = random_tensor(rng, {2, 1, 5, 5});
  CHECK(conv2d(x, Tensor({1, 1, 1, 1}, 1.0f), testing::t1({0}), 1, 0) == x);
  CHECK_THROWS_AS((void)conv2d(Tensor({1, 1, 2, 2}), Tensor({1, 1, 5, 5}), testing::t1({0}), 1, 1), Error);
  CHECK_THROWS_AS((void)conv2d(Tensor({1, 2, 4, 4}), Tensor({1, 1, 3, 3}), testing::t1({0}), 1, 1), Error);
}

TEST_CASE("conv2d matches a reference loop") {
  Rng rng(5);
  for (int stride : {1, 2}) {
    for (int pad : {0, 1, 2}) {
      const Tensor x = random_tensor(rng, {2, 3, 7, 6});
      const Tensor w = random_tensor(rng, {4, 3, 3, 3});
      const Tensor b = random_tensor(rng, {4});
      const Tensor y = conv2d(x, w, b, stride, pad);
      CHECK(y.shape() == Shape{2, 4, (7 + 2 * pad - 3) / stride + 1, (6 + 2 * pad - 3) / stride + 1});
      CHECK(close(y, conv_reference(x, w, b, stride, pad), 1e-6, 1e-6));
    }
  }
}

TEST_CASE("linear and conv2d are affine") {
  Rng rng(6);
  const Tensor w = random_tensor(rng, {5, 8}), b = random_tensor(rng, {5});
  const Tensor x1 = random_tensor(rng, {3, 8}), x2 = random_tensor(rng, {3, 8});
  const Tensor zero({3, 8});
  CHECK(close(linear(x1 + x2, w, b), linear(x1, w, b) + linear(x2, w, b) - linear(zero, w, b), 1e-5, 1e-6));

  const Tensor cw = random_tensor(rng, {2, 3, 3, 3}), cb = random_tensor(rng, {2});
  const Tensor c1 = random_tensor(rng, {2, 3, 6, 6}), c2 = random_tensor(rng, {2, 3, 6, 6});
  const Tensor cz({2, 3, 6, 6});
  CHECK(close(conv2d(c1 + c2, cw, cb, 1, 1), conv2d(c1, cw, cb, 1, 1) + conv2d(c2, cw, cb, 1, 1) - conv2d(cz, cw, cb, 1, 1),
              1e-5, 1e-5));
}

TEST_CASE("avgpool2d examples") {
  CHECK(avgpool2d(Tensor({1, 1, 2, 2}, 1.0f), 2) == Tensor({1, 1, 1, 1}, {1}));
  CHECK(avgpool2d(Tensor({1, 1, 2, 2}, {0, 2, 4, 2}), 2) == Tensor({1, 1, 1, 1}, {2}));
  CHECK(avgpool2d(Tensor({1, 1, 4, 4}, 0.3f), 2) == Tensor({1, 1, 2, 2}, 0.3f));
  CHECK_THROWS_AS((void)avgpool2d(Tensor({1, 1, 3, 4}), 2), Error);
}

TEST_CASE("flatten keeps the batch axis") {
  const Tensor x({2, 3, 2, 2}, 1.0f);
  CHECK(flatten(x).shape() == Shape{2, 12});
}

TEST_CASE("fold_batchnorm examples") {
  const Tensor w({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = testing::t1({0.5f, -1.0f});
  auto bn = [](float gamma, float beta) {
    return BatchNormStats{Tensor({2}, gamma), Tensor({2}, beta), Tensor({2}, 0.0f), Tensor({2}, 1.0f), 0.0f};
  };
  auto [w1, b1] = fold_batchnorm(w, b, bn(1, 0));
  CHECK(w1 == w);
  CHECK(b1 == b);
  auto [w2, b2] = fold_batchnorm(w, b, bn(2, 0));
  CHECK(w2 == Tensor({2, 3}, {2, 4, 6, 8, 10, 12}));
  CHECK(b2 == testing::t1({1.0f, -2.0f}));
  auto [w3, b3] = fold_batchnorm(w, b, bn(1, 5));
  CHECK(w3 == w);
  CHECK(b3 == testing::t1({5.5f, 4.0f}));

  BatchNormStats bad = bn(1, 0);
  bad.var = Tensor({2}, -1.0f);
  CHECK_THROWS_AS((void)fold_batchnorm(w, b, bad), Error);
}

TEST_CASE("folded network equals unfused network") {
  Rng rng(7);
  const Tensor w = random_tensor(rng, {6, 3, 3, 3}), b = random_tensor(rng, {6});
  BatchNormStats bn{random_tensor(rng, {6}, 0.5, 2.0), random_tensor(rng, {6}), random_tensor(rng, {6}),
                    random_tensor(rng, {6}, 0.1, 3.0), 1e-5f};
  const auto [wf, bf] = fold_batchnorm(w, b, bn);
  for (int i = 0; i < 100; ++i) {
    const Tensor x = random_tensor(rng, {1, 3, 5, 5});
    CHECK(close(conv2d(x, wf, bf, 1, 1), batchnorm(conv2d(x, w, b, 1, 1), bn), 1e-5, 1e-5));
  }
}

TEST_CASE("channel_mean") {
  CHECK(channel_mean(Tensor({2, 3, 4, 4}, 3.0f)) == Tensor({3}, 3.0f));
  CHECK(channel_mean(Tensor({2, 1}, {1, 3})) == testing::t1({2}));
  CHECK(channel_mean(Tensor({4, 5})) == Tensor({5}));
  CHECK_THROWS_AS((void)channel_mean(Tensor({0, 3})), Error);
}

TEST_CASE("channel_mean is invariant to batch order") {
  Rng rng(8);
  const Tensor x = random_tensor(rng, {16, 4, 3, 3});
  const auto row = x.size() / 16;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> perm(16);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < 16; ++i) {
      std::copy_n(x.data().begin() + perm[i] * row, row, y.data().begin() + i * row);
    }
    CHECK(channel_mean(y) == channel_mean(x));
  }
}
