#pragma once

#include <cmath>
#include <random>

#include "pcsnn/tensor.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline pcsnn::Tensor random_tensor(Rng& rng, pcsnn::Shape shape, double lo = -1.0, double hi = 1.0) {
  pcsnn::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(uniform(rng, lo, hi));
  return t;
}

/// |a - b| <= rel * max(|a|, |b|) + abs element-wise.
inline bool close(const pcsnn::Tensor& a, const pcsnn::Tensor& b, double rel, double abs = 0.0) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    if (std::abs(x - y) > rel * std::max(std::abs(x), std::abs(y)) + abs) return false;
  }
  return true;
}

inline pcsnn::Tensor t1(std::vector<float> v) { return pcsnn::Tensor::vector(std::move(v)); }

}  // namespace testing
