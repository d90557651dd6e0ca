#include "pcsnn/converter.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "pcsnn/numeric.hpp"

namespace pcsnn {

std::string_view to_string(ConversionCase c) {
  switch (c) {
    case ConversionCase::QcfsEqual: return "qcfs-eq";
    case ConversionCase::QcfsDifferent: return "qcfs-neq";
    case ConversionCase::Relu: return "relu";
  }
  return "?";
}

ConversionCase parse_conversion_case(std::string_view name) {
  if (name == "qcfs-eq") return ConversionCase::QcfsEqual;
  if (name == "qcfs-neq") return ConversionCase::QcfsDifferent;
  if (name == "relu") return ConversionCase::Relu;
  throw Error("unknown conversion case '" + std::string(name) + "' (expected qcfs-eq, qcfs-neq or relu)");
}

void CalibrationConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error("calibration momentum alpha must lie in [0, 1)");
  for (double a : layer_alpha) {
    if (!(a >= 0.0 && a < 1.0)) throw Error("per-layer momentum must lie in [0, 1)");
  }
  if (epochs < 1) throw Error("calibration needs at least one epoch");
  if (batch_size < 1) throw Error("calibration batch size must be positive");
}

double CalibrationConfig::alpha_for(std::size_t slot) const {
  return slot < layer_alpha.size() ? layer_alpha[slot] : alpha;
}

double LayerErrors::mean_post() const {
  if (post.empty()) return 0.0;
  return std::accumulate(post.begin(), post.end(), 0.0) / static_cast<double>(post.size());
}

LayerGraph init_da_params(const LayerGraph& graph, int steps) {
  if (steps < 1) throw Error("inference steps must be >= 1");
  const auto shapes = infer_shapes(graph);
  LayerGraph out = graph;
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    auto* act = std::get_if<Activation>(&out.layers[i].op);
    if (!act) continue;
    const Shape per_channel{channels_of(shapes[i])};
    ActivationSpec& s = act->spec;
    switch (s.kind) {
      case ActivationKind::QCFS:
        s = ActivationSpec::da_qcfs(s.theta, steps, s.psi, Tensor(per_channel), Tensor(per_channel));
        break;
      case ActivationKind::ClipReLU:
        s = ActivationSpec::da_qcfs(s.theta, steps, half_of(s.theta), Tensor(per_channel), Tensor(per_channel));
        break;
      default:
        throw Error("layer " + out.layers[i].name + ": cannot initialise DA-QCFS from " +
                    std::string(to_string(s.kind)) + " (expected qcfs or clip_relu)");
    }
  }
  return out;
}

namespace {

struct SlotState {
  std::size_t layer = 0;
  std::int64_t channels = 1;
  std::vector<double> psi_da;
  std::vector<double> phi_da;
};

struct SlotAccum {
  std::vector<double> pre_sum;
  std::vector<double> post_sum;
  double count = 0;
  double update_post_abs = 0;  // sum over updates of mean |e_post|
  std::size_t updates = 0;
};

double mean_abs(const Tensor& t) {
  double s = 0;
  for (float v : t.data()) s += std::abs(static_cast<double>(v));
  return t.empty() ? 0.0 : s / static_cast<double>(t.size());
}

Tensor to_param(const std::vector<double>& v) {
  Tensor t({static_cast<std::int64_t>(v.size())});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<float>(v[i]);
  return t;
}

// Ensures the two graphs differ only in their activation layers.
void require_twin(const LayerGraph& da, const LayerGraph& orig) {
  if (da.layers.size() != orig.layers.size() || da.input_shape != orig.input_shape) {
    throw Error("calibration graphs differ in structure");
  }
  for (std::size_t i = 0; i < da.layers.size(); ++i) {
    const auto& a = da.layers[i].op;
    const auto& b = orig.layers[i].op;
    if (a.index() != b.index()) throw Error("calibration graphs differ at layer " + std::to_string(i));
    if (const auto* act = std::get_if<Activation>(&a)) {
      if (act->spec.kind != ActivationKind::DAQCFS) {
        throw Error("layer " + da.layers[i].name + " of the calibrated graph is not DA-QCFS");
      }
      const auto k = std::get<Activation>(b).spec.kind;
      if (k != ActivationKind::QCFS && k != ActivationKind::ClipReLU) {
        throw Error("layer " + orig.layers[i].name + " of the original graph must be qcfs or clip_relu");
      }
    } else if (!(a == b)) {
      throw Error("calibration graphs have different weights at layer " + std::to_string(i));
    }
  }
}

std::vector<SlotState> initial_state(const LayerGraph& da) {
  const auto shapes = infer_shapes(da);
  std::vector<SlotState> state;
  for (std::size_t i = 0; i < da.layers.size(); ++i) {
    const auto* act = std::get_if<Activation>(&da.layers[i].op);
    if (!act) continue;
    SlotState s;
    s.layer = i;
    s.channels = channels_of(shapes[i]);
    const auto& spec = act->spec;
    s.psi_da.resize(static_cast<std::size_t>(s.channels));
    s.phi_da.resize(static_cast<std::size_t>(s.channels));
    for (std::int64_t c = 0; c < s.channels; ++c) {
      s.psi_da[c] = channel_value(spec.psi_da, c);
      s.phi_da[c] = channel_value(spec.phi_da, c);
    }
    state.push_back(std::move(s));
  }
  return state;
}

// One batch through both networks, layer by layer. With `config` set the
// DA parameters are updated in place as each activation is reached.
void sweep_batch(const LayerGraph& da, const LayerGraph& orig, const Tensor& batch, std::vector<SlotState>& state,
                 std::vector<SlotAccum>& accum, const CalibrationConfig* config) {
  Tensor r_oa = batch;
  Tensor r_da = batch;
  std::vector<std::pair<Tensor, Tensor>> skips;
  std::size_t slot = 0;
  for (std::size_t i = 0; i < da.layers.size(); ++i) {
    const auto& op = da.layers[i].op;
    if (std::holds_alternative<ResidualBegin>(op)) {
      skips.emplace_back(r_oa, r_da);
    } else if (std::holds_alternative<ResidualJoin>(op)) {
      r_oa = r_oa + skips.back().first;
      r_da = r_da + skips.back().second;
      skips.pop_back();
    } else if (const auto* act = std::get_if<Activation>(&op)) {
      SlotState& st = state[slot];
      SlotAccum& acc = accum[slot];
      const double alpha = config ? config->alpha_for(slot) : 0.0;
      ++slot;
      if (r_oa.shape() != r_da.shape()) throw Error("calibration passes diverged in shape at layer " + std::to_string(i));

      const Tensor e_pre = channel_mean(r_oa - r_da);
      if (config) {
        for (std::int64_t c = 0; c < st.channels; ++c) st.psi_da[c] = momentum_update(st.psi_da[c], e_pre[c], alpha);
      }
      ActivationSpec spec = act->spec;
      spec.psi_da = to_param(st.psi_da);
      spec.phi_da = to_param(st.phi_da);
      Tensor out_oa = apply_activation(std::get<Activation>(orig.layers[i].op).spec, r_oa);
      Tensor out_da = apply_activation(spec, r_da);
      const Tensor e_post = channel_mean(out_oa - out_da);
      if (config) {
        for (std::int64_t c = 0; c < st.channels; ++c) st.phi_da[c] = momentum_update(st.phi_da[c], e_post[c], alpha);
      }

      const double n = static_cast<double>(r_oa.size()) / static_cast<double>(st.channels);
      if (acc.pre_sum.empty()) {
        acc.pre_sum.assign(static_cast<std::size_t>(st.channels), 0.0);
        acc.post_sum.assign(static_cast<std::size_t>(st.channels), 0.0);
      }
      for (std::int64_t c = 0; c < st.channels; ++c) {
        acc.pre_sum[c] += e_pre[c] * n;
        acc.post_sum[c] += e_post[c] * n;
      }
      acc.count += n;
      acc.update_post_abs += mean_abs(e_post);
      ++acc.updates;

      r_oa = std::move(out_oa);
      r_da = std::move(out_da);
    } else {
      r_oa = apply_structural(op, r_oa);
      r_da = apply_structural(op, r_da);
    }
  }
}

LayerGraph write_back(const LayerGraph& da, const std::vector<SlotState>& state) {
  LayerGraph out = da;
  for (const auto& st : state) {
    auto& spec = std::get<Activation>(out.layers[st.layer].op).spec;
    spec.psi_da = to_param(st.psi_da);
    spec.phi_da = to_param(st.phi_da);
  }
  return out;
}

std::vector<std::size_t> batch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (seed == 0) return order;
  // Fisher-Yates driven by mt19937_64, whose output sequence is fixed by the standard.
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(epoch) * 0x9E3779B97F4A7C15ull);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

}  // namespace

LayerGraph calibrate(const LayerGraph& da_graph, const LayerGraph& original, std::span<const Tensor> batches,
                     const CalibrationConfig& config, CalibrationTrace* trace) {
  config.validate();
  if (batches.empty()) throw Error("calibration needs at least one batch");
  validate(da_graph);
  validate(original);
  require_twin(da_graph, original);
  auto state = initial_state(da_graph);
  if (trace) *trace = {};
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<SlotAccum> accum(state.size());
    for (std::size_t b : batch_order(batches.size(), config.seed, epoch)) {
      sweep_batch(da_graph, original, batches[b], state, accum, &config);
    }
    if (trace) {
      trace->updates += batches.size();
      std::vector<double> post;
      for (const auto& a : accum) post.push_back(a.update_post_abs / static_cast<double>(a.updates));
      if (epoch == 0) trace->first_epoch_post = post;
      trace->last_epoch_post = post;
    }
  }
  return write_back(da_graph, state);
}

LayerErrors measure_layer_errors(const LayerGraph& da_graph, const LayerGraph& original,
                                 std::span<const Tensor> batches) {
  if (batches.empty()) throw Error("error measurement needs at least one batch");
  require_twin(da_graph, original);
  auto state = initial_state(da_graph);
  std::vector<SlotAccum> accum(state.size());
  for (const Tensor& b : batches) sweep_batch(da_graph, original, b, state, accum, nullptr);
  LayerErrors out;
  for (const auto& a : accum) {
    double pre = 0, post = 0;
    for (std::size_t c = 0; c < a.pre_sum.size(); ++c) {
      pre += std::abs(a.pre_sum[c] / a.count);
      post += std::abs(a.post_sum[c] / a.count);
    }
    out.pre.push_back(pre / static_cast<double>(a.pre_sum.size()));
    out.post.push_back(post / static_cast<double>(a.post_sum.size()));
  }
  return out;
}

ConvertedNetwork convert(const LayerGraph& da_graph, int steps, ConversionCase conversion_case) {
  if (steps < 1) throw Error("inference steps must be >= 1");
  validate(da_graph);
  ConvertedNetwork net{da_graph, steps, conversion_case};
  for (auto& layer : net.graph.layers) {
    const auto* act = std::get_if<Activation>(&layer.op);
    if (!act) continue;
    const ActivationSpec& s = act->spec;
    if (s.kind != ActivationKind::DAQCFS) {
      throw Error("layer " + layer.name + ": parallel conversion needs DA-QCFS, got " + std::string(to_string(s.kind)));
    }
    if (s.levels != steps) {
      throw Error("layer " + layer.name + ": DA-QCFS has " + std::to_string(s.levels) + " levels but T=" +
                  std::to_string(steps));
    }
    ParallelNeuronParams p;
    p.steps = steps;
    p.shift = shift_vector(s.theta, s.psi, s.psi_da, steps);
    p.theta_pre = s.theta;
    const std::size_t c = std::max(s.theta.size(), s.phi_da.size());
    p.theta_post = (s.theta.rank() == 0 && s.phi_da.rank() == 0) ? Tensor(Shape{}) : Tensor({static_cast<std::int64_t>(c)});
    for (std::size_t ch = 0; ch < c; ++ch) {
      const auto cc = static_cast<std::int64_t>(ch);
      const float post = post_threshold(channel_value(s.theta, cc), channel_value(s.phi_da, cc));
      if (!(post > 0.0f)) {
        throw Error("layer " + layer.name + ": theta + phi_da <= 0 at channel " + std::to_string(ch));
      }
      p.theta_post[ch] = post;
    }
    layer.op = SpikingNeuron{std::move(p)};
  }
  validate(net.graph);
  return net;
}

ConvertedNetwork convert_qcfs_exact(const LayerGraph& qcfs_graph) {
  validate(qcfs_graph);
  int steps = 0;
  ConvertedNetwork net{qcfs_graph, 0, ConversionCase::QcfsEqual};
  for (auto& layer : net.graph.layers) {
    const auto* act = std::get_if<Activation>(&layer.op);
    if (!act) continue;
    const ActivationSpec& s = act->spec;
    if (s.kind != ActivationKind::QCFS) {
      throw Error("layer " + layer.name + ": exact conversion needs QCFS, got " + std::string(to_string(s.kind)));
    }
    if (steps != 0 && s.levels != steps) throw Error("QCFS layers use different level counts");
    steps = s.levels;
    ParallelNeuronParams p;
    p.steps = s.levels;
    p.shift = shift_vector(s.theta, s.psi, Tensor::scalar(0.0f), s.levels);
    p.theta_pre = s.theta;
    p.theta_post = s.theta;
    layer.op = SpikingNeuron{std::move(p)};
  }
  if (steps == 0) throw Error("graph has no activation layers to convert");
  net.steps = steps;
  validate(net.graph);
  return net;
}

PipelineResult training_free_pipeline(const LayerGraph& relu_graph, std::span<const Tensor> batches, int steps,
                                      const CalibrationConfig& config) {
  config.validate();
  PipelineResult out;
  out.thresholds = record_thresholds(relu_graph, batches);
  out.clip_graph = to_clip_relu(relu_graph, out.thresholds);
  out.calibrated = calibrate(init_da_params(out.clip_graph, steps), out.clip_graph, batches, config);
  out.network = convert(out.calibrated, steps, ConversionCase::Relu);
  return out;
}

ConvertedNetwork convert_network(const LayerGraph& source, int steps, std::span<const Tensor> batches,
                                 const CalibrationConfig& config) {
  switch (config.conversion_case) {
    case ConversionCase::QcfsEqual: {
      auto net = convert_qcfs_exact(source);
      if (net.steps != steps) {
        throw Error("qcfs-eq conversion needs T equal to the QCFS level count (" + std::to_string(net.steps) +
                    "), got " + std::to_string(steps));
      }
      return net;
    }
    case ConversionCase::QcfsDifferent: {
      for (const auto& layer : source.layers) {
        const auto* act = std::get_if<Activation>(&layer.op);
        if (act && act->spec.kind != ActivationKind::QCFS) throw Error("qcfs-neq conversion needs a QCFS network");
      }
      auto calibrated = calibrate(init_da_params(source, steps), source, batches, config);
      return convert(calibrated, steps, ConversionCase::QcfsDifferent);
    }
    case ConversionCase::Relu:
      return training_free_pipeline(source, batches, steps, config).network;
  }
  throw Error("unhandled conversion case");
}

}  // namespace pcsnn
