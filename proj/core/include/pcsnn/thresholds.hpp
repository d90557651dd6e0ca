#pragma once

#include <span>
#include <string>
#include <vector>

#include "pcsnn/layer_graph.hpp"

namespace pcsnn {

/// Smallest threshold assigned to a channel that never activated.
inline constexpr float kThresholdFloor = 1e-6f;

/// Running per-channel maximum of the pre-activation at every ReLU layer.
class ThresholdRecorder {
 public:
  explicit ThresholdRecorder(const LayerGraph& graph);

  /// Forwards one batch through the ReLU graph and updates the maxima.
  void observe(const Tensor& batch);
  /// Element-wise max with another recorder over the same graph.
  void merge(const ThresholdRecorder& other);

  std::size_t batches_seen() const noexcept { return batches_; }
  /// Raw running maxima, one [C] tensor per activation layer (may be <= 0).
  const std::vector<Tensor>& maxima() const noexcept { return maxima_; }

 private:
  const LayerGraph* graph_;
  std::vector<std::size_t> layer_index_;
  std::vector<Tensor> maxima_;
  std::size_t batches_ = 0;
};

struct ThresholdRecord {
  /// One [C] tensor per activation layer, in graph order.
  std::vector<Tensor> theta;
  /// One entry per channel that was clamped to the floor.
  std::vector<std::string> warnings;
};

/// Records per-channel thresholds over a non-empty stream of batches.
ThresholdRecord record_thresholds(const LayerGraph& graph, std::span<const Tensor> batches);

/// Finalizes a recorder: clamps non-positive maxima to kThresholdFloor.
ThresholdRecord finish(const ThresholdRecorder& recorder);

/// Copy of a ReLU graph with every activation replaced by ClipReLU(theta).
LayerGraph to_clip_relu(const LayerGraph& graph, const ThresholdRecord& record);

}  // namespace pcsnn
