#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pcsnn/layer_graph.hpp"
#include "pcsnn/thresholds.hpp"

namespace pcsnn {

/// Which kind of source network is being converted.
///  - QcfsEqual:     QCFS network run at its own level count (no calibration).
///  - QcfsDifferent: QCFS network run at another T (calibrated).
///  - Relu:          plain ReLU network (thresholds recorded, then calibrated).
enum class ConversionCase { QcfsEqual, QcfsDifferent, Relu };

std::string_view to_string(ConversionCase c);
/// Accepts "qcfs-eq", "qcfs-neq", "relu".
ConversionCase parse_conversion_case(std::string_view name);

struct CalibrationConfig {
  double alpha = 0.99;
  int epochs = 1;
  int batch_size = 32;
  ConversionCase conversion_case = ConversionCase::Relu;
  /// Seeds the per-epoch batch order. 0 keeps the given order.
  std::uint64_t seed = 0;
  /// Optional per-activation-layer momentum; empty means `alpha` everywhere.
  std::vector<double> layer_alpha;

  void validate() const;
  double alpha_for(std::size_t activation_slot) const;
};

/// An SNN: the source graph with each activation replaced by parallel neurons.
struct ConvertedNetwork {
  LayerGraph graph;
  int steps = 1;
  ConversionCase conversion_case = ConversionCase::QcfsEqual;

  friend bool operator==(const ConvertedNetwork&, const ConvertedNetwork&) = default;
};

/// One momentum step: alpha * param + (1 - alpha) * error.
inline double momentum_update(double param, double error, double alpha) noexcept {
  return alpha * param + (1.0 - alpha) * error;
}

/// Stage I: every QCFS/ClipReLU activation becomes DA-QCFS at `steps`
/// levels with theta and psi carried over (psi = theta/2 for ClipReLU) and
/// zero per-channel psi_da / phi_da.
LayerGraph init_da_params(const LayerGraph& graph, int steps);

/// Per-layer summary of the mean pre/post-activation error between the
/// original and the DA network (mean over channels of |channel mean|).
struct LayerErrors {
  std::vector<double> pre;
  std::vector<double> post;

  double mean_post() const;
};

/// Optional trace of a calibration run.
struct CalibrationTrace {
  std::size_t updates = 0;
  /// Mean |e_post| per layer averaged over the updates of the first and last epoch.
  std::vector<double> first_epoch_post;
  std::vector<double> last_epoch_post;
};

/// Stage II: layer-wise error calibration of `da_graph` against `original`
/// over `batches`, sweeping both networks in lockstep.
LayerGraph calibrate(const LayerGraph& da_graph, const LayerGraph& original, std::span<const Tensor> batches,
                     const CalibrationConfig& config, CalibrationTrace* trace = nullptr);

/// The same lockstep sweep without updates; reports errors over all batches.
LayerErrors measure_layer_errors(const LayerGraph& da_graph, const LayerGraph& original,
                                 std::span<const Tensor> batches);

/// Stage III: DA-QCFS activations become parallel neurons at `steps`.
ConvertedNetwork convert(const LayerGraph& da_graph, int steps,
                         ConversionCase conversion_case = ConversionCase::QcfsDifferent);

/// Direct conversion of a QCFS network at its own level count.
ConvertedNetwork convert_qcfs_exact(const LayerGraph& qcfs_graph);

struct PipelineResult {
  ConvertedNetwork network;
  ThresholdRecord thresholds;
  LayerGraph clip_graph;
  LayerGraph calibrated;
};

/// ReLU -> ClipReLU -> DA-QCFS -> parallel neurons.
PipelineResult training_free_pipeline(const LayerGraph& relu_graph, std::span<const Tensor> batches, int steps,
                                      const CalibrationConfig& config);

/// Dispatches on `config.conversion_case`.
ConvertedNetwork convert_network(const LayerGraph& source, int steps, std::span<const Tensor> batches,
                                 const CalibrationConfig& config);

}  // namespace pcsnn
