#pragma once

#include <cstdint>
#include <string_view>

#include "pcsnn/layer_graph.hpp"

namespace pcsnn {

enum class SynthArch { MLP, Conv, VGG, ResNet };

std::string_view to_string(SynthArch a);
/// Accepts "mlp", "conv", "vgg", "resnet".
SynthArch parse_synth_arch(std::string_view name);

struct SynthModelConfig {
  SynthArch arch = SynthArch::MLP;
  /// Hidden activation layers (MLP, Conv, VGG) or residual blocks (ResNet).
  int depth = 4;
  /// Hidden units (MLP) or base channel count (conv nets).
  int width = 64;
  /// Per-sample input shape: [D] for MLP, [C, H, W] otherwise.
  Shape input_shape{32};
  int classes = 10;
  /// QCFS or ReLU.
  ActivationKind activation = ActivationKind::QCFS;
  float theta = 1.0f;
  /// Per-channel thresholds drawn from theta * U[1 - jitter, 1 + jitter] when > 0.
  float theta_jitter = 0.0f;
  int levels = 8;
  float bias_scale = 0.05f;
  std::uint64_t seed = 1;
};

/// Random-weight network (He-normal weights, small normal biases) for
/// property tests and benchmarks. Deterministic in `seed`.
LayerGraph make_synth_model(const SynthModelConfig& config);

}  // namespace pcsnn
