#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pcsnn/tensor.hpp"

namespace pcsnn {

enum class Split { Calibration, Evaluation };

std::string_view to_string(Split s);
Split parse_split(std::string_view name);

struct Dataset {
  Tensor inputs;  // [N, ...]
  std::vector<int> labels;
  int classes = 0;
  /// "synthetic(seed=..., ...)" or "cifar10-binary(<path>)".
  std::string source;
  Split split = Split::Evaluation;
  /// Per-channel normalisation already applied to `inputs`.
  std::vector<float> mean;
  std::vector<float> std;

  std::int64_t size() const noexcept { return inputs.rank() ? inputs.dim(0) : 0; }
  /// Consecutive batches; the last one may be short.
  std::vector<Tensor> batches(std::size_t batch_size) const;
  Dataset head(std::int64_t n) const;
};

/// Class-conditional Gaussian data. Every class has a fixed mean vector drawn
/// from U[-1, 1] per element (shared by both splits); samples add N(0, noise^2)
/// per element. Uses mt19937_64 and Box-Muller only, so output is identical
/// on every platform.
Dataset synth_dataset(std::uint64_t seed, const Shape& dims, int classes, std::int64_t n,
                      Split split = Split::Calibration, float noise = 0.5f);

/// Reads a CIFAR-10 binary batch (3073-byte records: label, 3072 CHW pixel bytes),
/// scales pixels to [0, 1] and normalises with the usual CIFAR-10 statistics.
/// `limit` > 0 keeps only the first records.
Dataset load_cifar10(const std::filesystem::path& path, std::int64_t limit = 0);

inline constexpr std::int64_t kCifarRecordBytes = 3073;

}  // namespace pcsnn
