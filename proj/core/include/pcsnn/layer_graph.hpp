#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "pcsnn/activation.hpp"
#include "pcsnn/parallel_neuron.hpp"
#include "pcsnn/tensor.hpp"

namespace pcsnn {

struct Linear {
  Tensor weight;  // [Cout, Cin]
  Tensor bias;    // [Cout]
  friend bool operator==(const Linear&, const Linear&) = default;
};

struct Conv2d {
  Tensor weight;  // [Cout, Cin, kh, kw]
  Tensor bias;    // [Cout]
  int stride = 1;
  int padding = 0;
  friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

struct AvgPool2d {
  int k = 2;
  friend bool operator==(const AvgPool2d&, const AvgPool2d&) = default;
};

struct Flatten {
  friend bool operator==(const Flatten&, const Flatten&) = default;
};

struct Activation {
  ActivationSpec spec;
  friend bool operator==(const Activation&, const Activation&) = default;
};

/// A converted activation: parallel spiking neurons.
struct SpikingNeuron {
  ParallelNeuronParams params;
  friend bool operator==(const SpikingNeuron&, const SpikingNeuron&) = default;
};

/// Saves the current tensor; the matching join adds it back.
struct ResidualBegin {
  int id = 0;
  friend bool operator==(const ResidualBegin&, const ResidualBegin&) = default;
};

struct ResidualJoin {
  int id = 0;
  friend bool operator==(const ResidualJoin&, const ResidualJoin&) = default;
};

using LayerOp = std::variant<Linear, Conv2d, AvgPool2d, Flatten, Activation, SpikingNeuron, ResidualBegin, ResidualJoin>;

struct Layer {
  std::string name;
  LayerOp op;
  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Feed-forward network. `input_shape` excludes the batch axis.
struct LayerGraph {
  Shape input_shape;
  std::vector<Layer> layers;

  /// Indices of Activation and SpikingNeuron layers, in order.
  std::vector<std::size_t> neuron_layers() const;

  friend bool operator==(const LayerGraph&, const LayerGraph&) = default;
};

/// Per-sample output shape after every layer (no batch axis). Also checks
/// residual nesting, join shape agreement and activation channel counts.
std::vector<Shape> infer_shapes(const LayerGraph& graph);

/// Throws Error describing the first structural problem found.
inline void validate(const LayerGraph& graph) { (void)infer_shapes(graph); }

/// Channel count of a per-sample shape ([C] or [C, H, W]).
std::int64_t channels_of(const Shape& sample_shape);

/// Channel count seen by neuron layer `index` (its input's channel axis).
std::int64_t layer_channels(const LayerGraph& graph, std::size_t index);

/// Callback for Activation/SpikingNeuron layers: receives the layer index,
/// the layer and its batched input; returns the layer output.
using NeuronFn = std::function<Tensor(std::size_t, const Layer&, Tensor)>;

/// Runs x[N, ...] through the graph. Synaptic, pooling, flatten and
/// residual layers are evaluated here; neuron layers are delegated.
Tensor run_graph(const LayerGraph& graph, Tensor x, const NeuronFn& neuron);

/// Applies one synaptic/pooling/flatten layer.
Tensor apply_structural(const LayerOp& op, const Tensor& x);

}  // namespace pcsnn
