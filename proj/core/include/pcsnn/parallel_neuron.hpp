#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcsnn/tensor.hpp"

namespace pcsnn {

// Step indices in this header are 1-based (x in [1, T]), matching the usual
// statement of the conversion formulas. "Never fires" is reported as T + 1.

/// Converted parameters of one spiking layer.
///
/// Shapes depend on how the layer was converted:
///   QCFS at its own level count: shift [T],   theta_pre scalar, theta_post scalar
///   QCFS at a different T:       shift [T,C], theta_pre scalar, theta_post [C]
///   ReLU network:                shift [T,C], theta_pre [C],    theta_post [C]
struct ParallelNeuronParams {
  int steps = 1;
  Tensor shift;
  Tensor theta_pre;
  Tensor theta_post;

  /// Channel count implied by the per-channel fields; 1 when all are scalar.
  std::int64_t channels() const noexcept;

  float shift_at(int step, std::int64_t channel) const noexcept;
  float pre_at(std::int64_t channel) const noexcept;
  float post_at(std::int64_t channel) const noexcept;

  /// Throws Error when shapes are inconsistent or thresholds non-positive.
  void validate() const;

  friend bool operator==(const ParallelNeuronParams&, const ParallelNeuronParams&) = default;
};

/// Binary [T x units] spike matrix. Trains from the fast path keep only the
/// first firing step per unit; bits are produced on demand.
class SpikeTrain {
 public:
  SpikeTrain() = default;

  static SpikeTrain from_first_fire(int steps, std::vector<int> first_fire);
  /// `bits` is step-major: bits[(x-1) * units + u].
  static SpikeTrain from_bits(int steps, std::size_t units, std::vector<std::uint8_t> bits);

  int steps() const noexcept { return steps_; }
  std::size_t units() const noexcept { return units_; }

  bool fires(int step, std::size_t unit) const;
  int count(std::size_t unit) const;
  std::uint64_t total_spikes() const;
  /// First step with a spike, T + 1 if none.
  int first_fire(std::size_t unit) const;

  std::vector<std::uint8_t> materialize() const;
  /// Every column is 0...0 1...1.
  bool is_sorted() const;

  friend bool operator==(const SpikeTrain& a, const SpikeTrain& b) {
    return a.steps_ == b.steps_ && a.units_ == b.units_ && a.materialize() == b.materialize();
  }

 private:
  int steps_ = 0;
  std::size_t units_ = 0;
  std::vector<int> first_fire_;
  std::vector<std::uint8_t> bits_;
  bool dense_ = false;
};

/// Stateful integrate-and-fire layer with soft reset:
///   v_pre = leak * v + I;  s = v_pre >= theta;  v = v_pre - s * theta.
class IntegrateFireLayer {
 public:
  IntegrateFireLayer(std::vector<double> v0, std::vector<float> theta, double leak = 1.0);

  void step(std::span<const float> current, std::span<std::uint8_t> spikes);
  std::span<const double> potential() const noexcept { return v_; }
  std::size_t units() const noexcept { return v_.size(); }

 private:
  std::vector<double> v_;
  std::vector<float> theta_;
  double leak_;
};

struct SerialRun {
  SpikeTrain spikes;
  std::vector<double> final_potential;
};

/// Step-by-step (L)IF simulation of current[T, units].
SerialRun serial_if_run(const Tensor& current, float theta, double leak, std::span<const double> v0);

/// Parallel neuron without reset: v_pre = Lambda * I with Lambda[t,i] = leak^(t-i)
/// on and below the diagonal.
SpikeTrain vanilla_parallel_run(const Tensor& current, double leak, float theta);

/// c[x] = T / (x (T - x + 1)).
Tensor pc_coefficients(int steps);

/// Fused conversion matrix: every entry of row x equals 1 / (T - x + 1).
Tensor pc_matrix(int steps);

/// Shift vector b[x, c] = (psi[c] + psi_da[c] * T) / (T - x + 1).
/// Shape [T] when every argument is scalar, otherwise [T, C].
Tensor shift_vector(const Tensor& theta, const Tensor& psi, const Tensor& psi_da, int steps);
/// Same with psi = theta / 2.
Tensor shift_vector(const Tensor& theta, const Tensor& psi_da, int steps);

/// The firing test at step x for a unit whose summed input current is `current_sum`:
///   current_sum / (T - x + 1) + b[x] >= theta_pre.
inline bool fires_at(float current_sum, const ParallelNeuronParams& p, int step, std::int64_t channel) noexcept {
  const double charge = static_cast<double>(current_sum) / (p.steps - step + 1);
  return charge + static_cast<double>(p.shift_at(step, channel)) >= static_cast<double>(p.pre_at(channel));
}

/// Sum over time of current[T, units], accumulated in double in step order.
std::vector<float> temporal_sum(const Tensor& current);

/// Reference firing path: evaluates the test at every step for every unit.
/// Unit u belongs to channel (u / spatial) % C.
SpikeTrain pc_fire_full(const Tensor& current, const ParallelNeuronParams& params, std::int64_t spatial = 1);

struct FastFire {
  std::vector<int> first_fire;
  SpikeTrain spikes;
  std::uint64_t evaluations = 0;
  int max_evaluations = 0;
};

/// First firing step of one unit by binary search over [1, T]. `evaluations`
/// is incremented once per firing test.
int first_fire_step(float current_sum, const ParallelNeuronParams& params, std::int64_t channel, int& evaluations);

/// Fast firing path over per-unit summed currents.
FastFire pc_fire_fast(std::span<const float> current_sum, const ParallelNeuronParams& params,
                      std::int64_t spatial = 1);

/// r[u] = count(u) * theta_post[c(u)] / T.
Tensor rate_from_spikes(const SpikeTrain& spikes, const Tensor& theta_post, std::int64_t spatial = 1);

}  // namespace pcsnn
