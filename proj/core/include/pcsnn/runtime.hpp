#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pcsnn/converter.hpp"

namespace pcsnn {

enum class Backend { Serial, ParallelFull, ParallelFast };

std::string_view to_string(Backend b);
/// Accepts "serial", "parallel-full", "parallel-fast".
Backend parse_backend(std::string_view name);

/// Called for each neuron layer with its (batched) spike train. Unit u of
/// the train is flat element u of the layer's [N, C, ...] output.
using SpikeObserver = std::function<void(std::size_t layer, const SpikeTrain&)>;

struct RuntimeOptions {
  Backend backend = Backend::ParallelFast;
  /// Worker threads splitting the batch; results do not depend on it.
  int threads = 1;
  /// Fill InferenceReport::layer_rates.
  bool record_rates = false;
  /// Count columns of parallel spike trains that are not 0..0 1..1.
  bool check_sorting = false;
  SpikeObserver on_spikes;
};

struct InferenceReport {
  Tensor logits;
  std::vector<int> top1;
  /// Mean firing rate (spikes per unit per step) of each neuron layer.
  std::vector<double> layer_rates;
  double wall_time = 0.0;
  double firing_sparsity = 0.0;
  std::uint64_t spikes = 0;
  std::uint64_t unit_steps = 0;
  std::uint64_t sorting_violations = 0;
};

std::vector<int> argmax_rows(const Tensor& logits);

/// Called for every activation with the batched pre-activation.
using ActivationObserver = std::function<void(std::size_t layer, const ActivationSpec&, const Tensor& pre)>;

Tensor ann_forward(const LayerGraph& graph, const Tensor& x, const ActivationObserver& observer = {});

/// Parallel inference: each neuron layer sees the per-unit current summed
/// over T steps (T times the synaptic output of the incoming rate), fires
/// through the selected parallel path and passes on count * theta_post / T.
InferenceReport snn_parallel_forward(const ConvertedNetwork& net, const Tensor& x, int steps,
                                     const RuntimeOptions& options = {});

/// Step-by-step IF simulation of the converted network (soft reset,
/// v0 = psi + psi_da * T). Logits are the time-averaged output currents.
InferenceReport snn_serial_forward(const ConvertedNetwork& net, const Tensor& x, int steps,
                                   const RuntimeOptions& options = {});

/// Dispatches on options.backend.
InferenceReport snn_forward(const ConvertedNetwork& net, const Tensor& x, int steps, const RuntimeOptions& options = {});

struct EvalResult {
  std::size_t samples = 0;
  double accuracy = 0.0;
  std::vector<int> predictions;
};

double accuracy(std::span<const int> predictions, std::span<const int> labels);
double agreement(std::span<const int> a, std::span<const int> b);

/// Batched ANN evaluation.
EvalResult evaluate(const LayerGraph& graph, const Tensor& inputs, std::span<const int> labels,
                    std::size_t batch_size = 64);
/// Batched SNN evaluation.
EvalResult evaluate(const ConvertedNetwork& net, const Tensor& inputs, std::span<const int> labels,
                    const RuntimeOptions& options = {}, std::size_t batch_size = 64);

struct BenchConfig {
  int warmup = 3;
  int repeats = 7;
  int threads = 1;
  Backend parallel_backend = Backend::ParallelFast;
};

struct BenchRow {
  int steps = 0;
  double serial_time = 0.0;
  double parallel_time = 0.0;
  double ratio = 0.0;
  std::int64_t batch = 0;
  int threads = 1;
};

/// Median wall time of serial vs parallel inference for every T.
/// `network_for` builds the converted network for a given T.
std::vector<BenchRow> bench(const std::function<ConvertedNetwork(int)>& network_for, const Tensor& inputs,
                            std::span<const int> steps_list, const BenchConfig& config = {});

/// Convenience overload for a QCFS or ClipReLU source graph: each T is
/// converted via DA-QCFS initialisation without calibration.
std::vector<BenchRow> bench(const LayerGraph& source, const Tensor& inputs, std::span<const int> steps_list,
                            const BenchConfig& config = {});

/// Rows [begin, end) of a batched tensor.
Tensor slice_batch(const Tensor& x, std::int64_t begin, std::int64_t end);

}  // namespace pcsnn
