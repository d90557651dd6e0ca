#include "pcsnn/layer_graph.hpp"


#include "pcsnn/numeric.hpp"

namespace pcsnn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(const Layer& layer, std::size_t index, const std::string& what) {
  throw Error("layer " + std::to_string(index) + " (" + layer.name + "): " + what);
}

}  // namespace

std::vector<std::size_t> LayerGraph::neuron_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (std::holds_alternative<Activation>(layers[i].op) || std::holds_alternative<SpikingNeuron>(layers[i].op)) {
      out.push_back(i);
    }
  }
  return out;
}

std::int64_t channels_of(const Shape& sample_shape) {
  if (sample_shape.empty()) throw Error("scalar per-sample shape has no channel axis");
  return sample_shape[0];
}

std::vector<Shape> infer_shapes(const LayerGraph& graph) {
  if (graph.input_shape.empty()) throw Error("graph input shape is empty");
  std::vector<Shape> shapes;
  shapes.reserve(graph.layers.size());
  Shape cur = graph.input_shape;
  std::vector<std::pair<int, Shape>> open;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const Layer& layer = graph.layers[i];
    std::visit(
        overloaded{
            [&](const Linear& l) {
              if (cur.size() != 1) fail(layer, i, "linear needs a flat input, got " + to_string(cur));
              if (l.weight.rank() != 2 || l.weight.dim(1) != cur[0] || l.bias.shape() != Shape{l.weight.dim(0)}) {
                fail(layer, i, "linear weight " + to_string(l.weight.shape()) + " / bias " + to_string(l.bias.shape()) +
                                   " do not fit input " + to_string(cur));
              }
              cur = {l.weight.dim(0)};
            },
            [&](const Conv2d& c) {
              if (cur.size() != 3) fail(layer, i, "conv2d needs a [C,H,W] input, got " + to_string(cur));
              if (c.weight.rank() != 4 || c.weight.dim(1) != cur[0] || c.bias.shape() != Shape{c.weight.dim(0)}) {
                fail(layer, i, "conv2d weight " + to_string(c.weight.shape()) + " does not fit input " + to_string(cur));
              }
              if (c.stride < 1 || c.padding < 0) fail(layer, i, "bad stride/padding");
              const auto kh = c.weight.dim(2), kw = c.weight.dim(3);
              if (kh > cur[1] + 2 * c.padding || kw > cur[2] + 2 * c.padding) fail(layer, i, "kernel larger than input");
              cur = {c.weight.dim(0), (cur[1] + 2 * c.padding - kh) / c.stride + 1,
                     (cur[2] + 2 * c.padding - kw) / c.stride + 1};
            },
            [&](const AvgPool2d& p) {
              if (cur.size() != 3) fail(layer, i, "avgpool2d needs a [C,H,W] input, got " + to_string(cur));
              if (p.k < 1 || cur[1] % p.k != 0 || cur[2] % p.k != 0) {
                fail(layer, i, "window " + std::to_string(p.k) + " does not divide " + to_string(cur));
              }
              cur = {cur[0], cur[1] / p.k, cur[2] / p.k};
            },
            [&](const Flatten&) { cur = {numel(cur)}; },
            [&](const Activation& a) {
              try {
                a.spec.validate(channels_of(cur));
              } catch (const Error& e) {
                fail(layer, i, e.what());
              }
            },
            [&](const SpikingNeuron& n) {
              try {
                n.params.validate();
              } catch (const Error& e) {
                fail(layer, i, e.what());
              }
              const auto c = n.params.channels();
              if (c != 1 && c != channels_of(cur)) {
                fail(layer, i, "neuron has " + std::to_string(c) + " channels, input " + to_string(cur));
              }
            },
            [&](const ResidualBegin& r) {
              for (const auto& [id, _] : open) {
                if (id == r.id) fail(layer, i, "residual id " + std::to_string(r.id) + " opened twice");
              }
              open.emplace_back(r.id, cur);
            },
            [&](const ResidualJoin& r) {
              if (open.empty() || open.back().first != r.id) {
                fail(layer, i, "residual join " + std::to_string(r.id) + " does not close the innermost open span");
              }
              if (open.back().second != cur) {
                fail(layer, i, "residual branch shape " + to_string(cur) + " differs from skip shape " +
                                   to_string(open.back().second));
              }
              open.pop_back();
            },
        },
        layer.op);
    shapes.push_back(cur);
  }
  if (!open.empty()) throw Error("residual span " + std::to_string(open.back().first) + " is never joined");
  return shapes;
}

std::int64_t layer_channels(const LayerGraph& graph, std::size_t index) {
  const auto shapes = infer_shapes(graph);
  return channels_of(shapes.at(index));
}

Tensor apply_structural(const LayerOp& op, const Tensor& x) {
  return std::visit(overloaded{
                        [&](const Linear& l) { return linear(x, l.weight, l.bias); },
                        [&](const Conv2d& c) { return conv2d(x, c.weight, c.bias, c.stride, c.padding); },
                        [&](const AvgPool2d& p) { return avgpool2d(x, p.k); },
                        [&](const Flatten&) { return flatten(x); },
                        [&](const auto&) -> Tensor { throw Error("apply_structural: not a structural layer"); },
                    },
                    op);
}

Tensor run_graph(const LayerGraph& graph, Tensor x, const NeuronFn& neuron) {
  Shape expect{x.rank() ? x.dim(0) : 0};
  expect.insert(expect.end(), graph.input_shape.begin(), graph.input_shape.end());
  if (x.shape() != expect) {
    throw Error("input shape " + to_string(x.shape()) + " does not match graph input [N]+" +
                to_string(graph.input_shape));
  }
  std::vector<std::pair<int, Tensor>> skips;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const Layer& layer = graph.layers[i];
    if (std::holds_alternative<Activation>(layer.op) || std::holds_alternative<SpikingNeuron>(layer.op)) {
      x = neuron(i, layer, std::move(x));
    } else if (const auto* rb = std::get_if<ResidualBegin>(&layer.op)) {
      skips.emplace_back(rb->id, x);
    } else if (const auto* rj = std::get_if<ResidualJoin>(&layer.op)) {
      if (skips.empty() || skips.back().first != rj->id) fail(layer, i, "unmatched residual join");
      x = x + skips.back().second;
      skips.pop_back();
    } else {
      x = apply_structural(layer.op, x);
    }
  }
  return x;
}

}  // namespace pcsnn
