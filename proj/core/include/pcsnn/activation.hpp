#pragma once

#include <string_view>

#include "pcsnn/tensor.hpp"

namespace pcsnn {

enum class ActivationKind { ReLU, ClipReLU, QCFS, DAQCFS };

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation_kind(std::string_view name);

/// One activation layer's function and parameters. Per-channel parameters
/// are either rank-0 (broadcast to every channel) or shape [C].
///
/// - ReLU uses nothing.
/// - ClipReLU uses `theta` (the clip ceiling).
/// - QCFS uses `theta`, `levels` (the quantization level count) and `psi`.
/// - DAQCFS additionally uses the distribution-aware shift `psi_da` and
///   scale `phi_da`.
struct ActivationSpec {
  ActivationKind kind = ActivationKind::ReLU;
  Tensor theta;
  int levels = 0;
  Tensor psi;
  Tensor psi_da;
  Tensor phi_da;

  static ActivationSpec relu();
  static ActivationSpec clip_relu(Tensor theta);
  /// psi defaults to theta / 2.
  static ActivationSpec qcfs(Tensor theta, int levels);
  static ActivationSpec qcfs(Tensor theta, int levels, Tensor psi);
  static ActivationSpec da_qcfs(Tensor theta, int levels, Tensor psi, Tensor psi_da, Tensor phi_da);

  /// Checks the invariants for a layer with `channels` channels; throws Error.
  void validate(std::int64_t channels) const;

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

/// Broadcast accessor for a scalar-or-[C] parameter.
inline float channel_value(const Tensor& param, std::int64_t channel) noexcept {
  return param.size() == 1 ? param[0] : param[static_cast<std::size_t>(channel)];
}

/// theta / 2 with the same shape as theta.
Tensor half_of(const Tensor& theta);

/// Number of quantization steps reached: Clip(floor((a * levels + psi) / theta), 0, levels).
int qcfs_level(double a, double theta, int levels, double psi) noexcept;

/// amplitude * count / steps, rounded once to float. Shared by the QCFS
/// family and spike-rate readout so identical counts give identical rates.
float quantized_rate(int count, float amplitude, int steps) noexcept;

/// theta + phi in float arithmetic; the output amplitude of DA-QCFS.
inline float post_threshold(float theta, float phi) noexcept { return theta + phi; }

Tensor relu(const Tensor& a);
Tensor clip_relu(const Tensor& a, const Tensor& theta);
Tensor qcfs(const Tensor& a, const Tensor& theta, int levels, const Tensor& psi);
Tensor da_qcfs(const Tensor& a, const Tensor& theta, int levels, const Tensor& psi, const Tensor& psi_da,
               const Tensor& phi_da);

Tensor apply_activation(const ActivationSpec& spec, const Tensor& a);

/// Smallest distance from `a` to an input value at which the staircase
/// jumps (for QCFS/DA-QCFS: a_k = (k*theta - psi)/levels - psi_da, k = 1..levels).
double level_boundary_distance(double a, double theta, int levels, double psi, double psi_da = 0.0) noexcept;

/// Minimum boundary distance over every element of a pre-activation tensor,
/// relative to the element's theta. Returns +inf for ReLU/ClipReLU.
double min_relative_boundary_distance(const ActivationSpec& spec, const Tensor& pre);

}  // namespace pcsnn
