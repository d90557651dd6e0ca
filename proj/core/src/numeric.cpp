#include "pcsnn/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace pcsnn {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw Error(std::string(what) + " must have rank " + std::to_string(rank) + ", got shape " +
                to_string(t.shape()));
  }
}

}  // namespace

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear input");
  require_rank(weight, 2, "linear weight");
  const auto n = x.dim(0), cin = x.dim(1), cout = weight.dim(0);
  if (weight.dim(1) != cin || bias.shape() != Shape{cout}) {
    throw Error("linear shape mismatch: input " + to_string(x.shape()) + ", weight " + to_string(weight.shape()) +
                ", bias " + to_string(bias.shape()));
  }
  Tensor y({n, cout});
  const float* xd = x.data().data();
  const float* wd = weight.data().data();
  float* yd = y.data().data();
  for (std::int64_t s = 0; s < n; ++s) {
    const float* xs = xd + s * cin;
    for (std::int64_t o = 0; o < cout; ++o) {
      const float* wo = wd + o * cin;
      double acc = bias[o];
      for (std::int64_t i = 0; i < cin; ++i) acc += static_cast<double>(wo[i]) * xs[i];
      yd[s * cout + o] = static_cast<float>(acc);
    }
  }
  return y;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int padding) {
  require_rank(x, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  const auto n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != cin || bias.shape() != Shape{cout}) {
    throw Error("conv2d shape mismatch: input " + to_string(x.shape()) + ", weight " + to_string(weight.shape()) +
                ", bias " + to_string(bias.shape()));
  }
  if (stride < 1 || padding < 0) throw Error("conv2d requires stride >= 1 and padding >= 0");
  if (kh > h + 2 * padding || kw > w + 2 * padding) {
    throw Error("conv2d kernel " + to_string(weight.shape()) + " larger than padded input " + to_string(x.shape()));
  }
  const auto oh = (h + 2 * padding - kh) / stride + 1;
  const auto ow = (w + 2 * padding - kw) / stride + 1;
  Tensor y({n, cout, oh, ow});
  const float* xd = x.data().data();
  const float* wd = weight.data().data();
  float* yd = y.data().data();
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t o = 0; o < cout; ++o) {
      for (std::int64_t oy = 0; oy < oh; ++oy) {
        for (std::int64_t ox = 0; ox < ow; ++ox) {
          double acc = bias[o];
          for (std::int64_t c = 0; c < cin; ++c) {
            const float* xc = xd + ((s * cin + c) * h) * w;
            const float* wc = wd + ((o * cin + c) * kh) * kw;
            for (std::int64_t ky = 0; ky < kh; ++ky) {
              const auto iy = oy * stride + ky - padding;
              if (iy < 0 || iy >= h) continue;
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                const auto ix = ox * stride + kx - padding;
                if (ix < 0 || ix >= w) continue;
                acc += static_cast<double>(wc[ky * kw + kx]) * xc[iy * w + ix];
              }
            }
          }
          yd[((s * cout + o) * oh + oy) * ow + ox] = static_cast<float>(acc);
        }
      }
    }
  }
  return y;
}

Tensor avgpool2d(const Tensor& x, int k) {
  require_rank(x, 4, "avgpool2d input");
  if (k < 1) throw Error("avgpool2d window must be >= 1");
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % k != 0 || w % k != 0) {
    throw Error("avgpool2d window " + std::to_string(k) + " does not divide spatial dims of " + to_string(x.shape()));
  }
  const auto oh = h / k, ow = w / k;
  Tensor y({n, c, oh, ow});
  const double inv = 1.0 / (static_cast<double>(k) * k);
  for (std::int64_t p = 0; p < n * c; ++p) {
    const float* xp = x.data().data() + p * h * w;
    float* yp = y.data().data() + p * oh * ow;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) acc += xp[(oy * k + ky) * w + ox * k + kx];
        yp[oy * ow + ox] = static_cast<float>(acc * inv);
      }
    }
  }
  return y;
}

Tensor flatten(const Tensor& x) {
  if (x.rank() < 1) throw Error("flatten needs a batch axis");
  const auto n = x.dim(0);
  return x.reshaped({n, n == 0 ? 0 : static_cast<std::int64_t>(x.size()) / n});
}

namespace {

void check_bn(const BatchNormStats& bn, std::int64_t channels) {
  const Shape want{channels};
  if (bn.gamma.shape() != want || bn.beta.shape() != want || bn.mean.shape() != want || bn.var.shape() != want) {
    throw Error("batchnorm statistics must have shape " + to_string(want));
  }
  for (std::int64_t c = 0; c < channels; ++c) {
    if (!(static_cast<double>(bn.var[c]) + bn.eps > 0.0)) {
      throw Error("batchnorm variance + eps must be positive (channel " + std::to_string(c) + ")");
    }
  }
}

}  // namespace

Tensor batchnorm(const Tensor& x, const BatchNormStats& bn) {
  if (x.rank() < 2) throw Error("batchnorm input needs a channel axis, got " + to_string(x.shape()));
  const auto n = x.dim(0), c = x.dim(1), sp = spatial_size(x.shape());
  check_bn(bn, c);
  Tensor y(x.shape());
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double inv_std = 1.0 / std::sqrt(static_cast<double>(bn.var[ch]) + bn.eps);
      for (std::int64_t p = 0; p < sp; ++p) {
        const auto i = (s * c + ch) * sp + p;
        y[i] = static_cast<float>((x[i] - static_cast<double>(bn.mean[ch])) * inv_std * bn.gamma[ch] + bn.beta[ch]);
      }
    }
  }
  return y;
}

std::pair<Tensor, Tensor> fold_batchnorm(const Tensor& weight, const Tensor& bias, const BatchNormStats& bn) {
  if (weight.rank() < 2) throw Error("fold_batchnorm weight must have rank >= 2");
  const auto cout = weight.dim(0);
  if (bias.shape() != Shape{cout}) throw Error("fold_batchnorm bias must have shape " + to_string({cout}));
  check_bn(bn, cout);
  const auto per_out = static_cast<std::int64_t>(weight.size()) / cout;
  Tensor w(weight.shape());
  Tensor b(bias.shape());
  for (std::int64_t o = 0; o < cout; ++o) {
    const double scale = bn.gamma[o] / std::sqrt(static_cast<double>(bn.var[o]) + bn.eps);
    for (std::int64_t i = 0; i < per_out; ++i) w[o * per_out + i] = static_cast<float>(weight[o * per_out + i] * scale);
    b[o] = static_cast<float>((static_cast<double>(bias[o]) - bn.mean[o]) * scale + bn.beta[o]);
  }
  return {std::move(w), std::move(b)};
}

Tensor channel_mean(const Tensor& x) {
  if (x.rank() < 2) throw Error("channel_mean needs shape [N, C, ...], got " + to_string(x.shape()));
  if (x.empty()) throw Error("channel_mean of an empty tensor");
  const auto n = x.dim(0), c = x.dim(1), sp = spatial_size(x.shape());
  Tensor out({c});
  const double count = static_cast<double>(n) * sp;
  // Summing in sorted order makes the result independent of sample order.
  std::vector<float> buf(static_cast<std::size_t>(n * sp));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    std::size_t k = 0;
    for (std::int64_t s = 0; s < n; ++s)
      for (std::int64_t p = 0; p < sp; ++p) buf[k++] = x[(s * c + ch) * sp + p];
    std::sort(buf.begin(), buf.end());
    double acc = 0.0;
    for (float v : buf) acc += v;
    out[ch] = static_cast<float>(acc / count);
  }
  return out;
}

}  // namespace pcsnn
