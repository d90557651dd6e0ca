#include "pcsnn/thresholds.hpp"

#include <algorithm>
#include <limits>

namespace pcsnn {

ThresholdRecorder::ThresholdRecorder(const LayerGraph& graph) : graph_(&graph) {
  const auto shapes = infer_shapes(graph);
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const auto* act = std::get_if<Activation>(&graph.layers[i].op);
    if (!act) continue;
    if (act->spec.kind != ActivationKind::ReLU) {
      throw Error("threshold recording needs ReLU activations; layer " + graph.layers[i].name + " is " +
                  std::string(to_string(act->spec.kind)));
    }
    layer_index_.push_back(i);
    maxima_.emplace_back(Shape{channels_of(shapes[i])}, -std::numeric_limits<float>::infinity());
  }
}

void ThresholdRecorder::observe(const Tensor& batch) {
  std::size_t slot = 0;
  run_graph(*graph_, batch, [&](std::size_t, const Layer&, Tensor pre) {
    Tensor& mx = maxima_[slot++];
    const auto c = mx.dim(0);
    const auto sp = spatial_size(pre.shape());
    for (std::size_t i = 0; i < pre.size(); ++i) {
      const auto ch = static_cast<std::size_t>((static_cast<std::int64_t>(i) / sp) % c);
      mx[ch] = std::max(mx[ch], pre[i]);
    }
    return relu(pre);
  });
  ++batches_;
}

void ThresholdRecorder::merge(const ThresholdRecorder& other) {
  if (other.maxima_.size() != maxima_.size()) throw Error("merging threshold recorders of different graphs");
  for (std::size_t l = 0; l < maxima_.size(); ++l) {
    if (other.maxima_[l].shape() != maxima_[l].shape()) throw Error("merging threshold recorders of different graphs");
    for (std::size_t c = 0; c < maxima_[l].size(); ++c) maxima_[l][c] = std::max(maxima_[l][c], other.maxima_[l][c]);
  }
  batches_ += other.batches_;
}

ThresholdRecord finish(const ThresholdRecorder& recorder) {
  if (recorder.batches_seen() == 0) throw Error("threshold recording needs at least one calibration batch");
  ThresholdRecord rec;
  for (std::size_t l = 0; l < recorder.maxima().size(); ++l) {
    Tensor theta = recorder.maxima()[l];
    for (std::size_t c = 0; c < theta.size(); ++c) {
      if (!(theta[c] > kThresholdFloor)) {
        if (!(theta[c] > 0.0f)) {
          rec.warnings.push_back("activation " + std::to_string(l) + " channel " + std::to_string(c) +
                                 " never activated; threshold set to floor");
        }
        theta[c] = kThresholdFloor;
      }
    }
    rec.theta.push_back(std::move(theta));
  }
  return rec;
}

ThresholdRecord record_thresholds(const LayerGraph& graph, std::span<const Tensor> batches) {
  if (batches.empty()) throw Error("threshold recording needs at least one calibration batch");
  ThresholdRecorder recorder(graph);
  for (const Tensor& b : batches) recorder.observe(b);
  return finish(recorder);
}

LayerGraph to_clip_relu(const LayerGraph& graph, const ThresholdRecord& record) {
  LayerGraph out = graph;
  std::size_t slot = 0;
  for (auto& layer : out.layers) {
    auto* act = std::get_if<Activation>(&layer.op);
    if (!act) continue;
    if (slot >= record.theta.size()) throw Error("threshold record has fewer layers than the graph");
    act->spec = ActivationSpec::clip_relu(record.theta[slot++]);
  }
  if (slot != record.theta.size()) throw Error("threshold record has more layers than the graph");
  validate(out);
  return out;
}

}  // namespace pcsnn
