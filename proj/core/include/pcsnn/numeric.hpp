#pragma once

#include <utility>

#include "pcsnn/tensor.hpp"

namespace pcsnn {

// Dense kernels. All of them accumulate in double and round once on store,
// with a fixed loop order, so results are reproducible bit-for-bit.

/// y[n,o] = sum_i W[o,i] * x[n,i] + bias[o]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Direct cross-correlation over x[N,Cin,H,W] with weight[Cout,Cin,kh,kw].
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int padding);

/// Non-overlapping k x k mean over the trailing two axes of x[N,C,H,W].
Tensor avgpool2d(const Tensor& x, int k);

/// [N, ...] -> [N, prod(...)]
Tensor flatten(const Tensor& x);

struct BatchNormStats {
  Tensor gamma;
  Tensor beta;
  Tensor mean;
  Tensor var;
  float eps = 1e-5f;
};

/// Inference-mode batch norm over axis 1.
Tensor batchnorm(const Tensor& x, const BatchNormStats& bn);

/// Folds a batch norm that follows a linear/conv layer into its weights.
/// The first axis of `weight` is the output channel.
std::pair<Tensor, Tensor> fold_batchnorm(const Tensor& weight, const Tensor& bias, const BatchNormStats& bn);

/// Mean over every axis except axis 1 (batch and spatial positions).
Tensor channel_mean(const Tensor& x);

}  // namespace pcsnn
