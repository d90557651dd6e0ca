#include "pcsnn/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <optional>
#include <thread>

namespace pcsnn {

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::Serial: return "serial";
    case Backend::ParallelFull: return "parallel-full";
    case Backend::ParallelFast: return "parallel-fast";
  }
  return "?";
}

Backend parse_backend(std::string_view name) {
  if (name == "serial") return Backend::Serial;
  if (name == "parallel-full") return Backend::ParallelFull;
  if (name == "parallel-fast") return Backend::ParallelFast;
  throw Error("unknown backend '" + std::string(name) + "' (expected serial, parallel-full or parallel-fast)");
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw Error("argmax_rows expects [N, classes], got " + to_string(logits.shape()));
  const auto n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto row = logits.data().subspan(static_cast<std::size_t>(i * k), static_cast<std::size_t>(k));
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Tensor slice_batch(const Tensor& x, std::int64_t begin, std::int64_t end) {
  if (x.rank() < 1 || begin < 0 || end < begin || end > x.dim(0)) throw Error("slice_batch: bad range");
  Shape s = x.shape();
  const auto row = s[0] == 0 ? 0 : static_cast<std::int64_t>(x.size()) / s[0];
  s[0] = end - begin;
  const auto first = x.values().begin() + begin * row;
  return Tensor(std::move(s), std::vector<float>(first, first + (end - begin) * row));
}

Tensor ann_forward(const LayerGraph& graph, const Tensor& x, const ActivationObserver& observer) {
  return run_graph(graph, x, [&](std::size_t idx, const Layer& layer, Tensor pre) {
    const auto* act = std::get_if<Activation>(&layer.op);
    if (!act) throw Error("ann_forward: layer " + layer.name + " is a spiking layer");
    if (observer) observer(idx, act->spec, pre);
    return apply_activation(act->spec, pre);
  });
}

namespace {

struct ChunkOut {
  Tensor logits;
  std::vector<std::uint64_t> layer_spikes;
  std::vector<std::uint64_t> layer_unit_steps;
  std::uint64_t violations = 0;
};

using Clock = std::chrono::steady_clock;

const ParallelNeuronParams& neuron_params(const Layer& layer) {
  const auto* sn = std::get_if<SpikingNeuron>(&layer.op);
  if (!sn) throw Error("layer " + layer.name + " is an unconverted activation");
  return sn->params;
}

void check_steps(const ConvertedNetwork& net, int steps) {
  if (net.steps != steps) {
    throw Error("network was converted for T=" + std::to_string(net.steps) + ", asked to run T=" + std::to_string(steps));
  }
}

std::uint64_t unsorted_columns(const SpikeTrain& train) {
  if (train.is_sorted()) return 0;
  std::uint64_t bad = 0;
  for (std::size_t u = 0; u < train.units(); ++u) {
    for (int x = 2; x <= train.steps(); ++x) {
      if (train.fires(x - 1, u) && !train.fires(x, u)) {
        ++bad;
        break;
      }
    }
  }
  return bad;
}

ChunkOut parallel_chunk(const ConvertedNetwork& net, const Tensor& x, int steps, const RuntimeOptions& opt) {
  ChunkOut out;
  const auto layers = net.graph.neuron_layers().size();
  out.layer_spikes.assign(layers, 0);
  out.layer_unit_steps.assign(layers, 0);
  std::size_t slot = 0;
  out.logits = run_graph(net.graph, x, [&](std::size_t idx, const Layer& layer, Tensor z) {
    const auto& p = neuron_params(layer);
    const auto spatial = spatial_size(z.shape());
    // Total current over T steps of a constant per-step current z.
    std::vector<float> sums(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) sums[i] = static_cast<float>(static_cast<double>(z[i]) * steps);

    SpikeTrain train;
    if (opt.backend == Backend::ParallelFull) {
      Tensor current({steps, static_cast<std::int64_t>(z.size())});
      for (int t = 0; t < steps; ++t) std::copy(z.data().begin(), z.data().end(), current.data().begin() + t * z.size());
      train = pc_fire_full(current, p, spatial);
      if (opt.check_sorting) out.violations += unsorted_columns(train);
    } else {
      train = pc_fire_fast(sums, p, spatial).spikes;
    }
    if (opt.on_spikes) opt.on_spikes(idx, train);
    out.layer_spikes[slot] += train.total_spikes();
    out.layer_unit_steps[slot] += static_cast<std::uint64_t>(z.size()) * static_cast<std::uint64_t>(steps);
    ++slot;
    return rate_from_spikes(train, p.theta_post, spatial).reshaped(z.shape());
  });
  return out;
}

struct SerialLayerState {
  IntegrateFireLayer neurons;
  std::vector<std::int64_t> channel;
  std::vector<std::uint8_t> step_spikes;
  std::vector<std::uint8_t> history;
};

ChunkOut serial_chunk(const ConvertedNetwork& net, const Tensor& x, int steps, const RuntimeOptions& opt) {
  ChunkOut out;
  const auto neuron_idx = net.graph.neuron_layers();
  out.layer_spikes.assign(neuron_idx.size(), 0);
  out.layer_unit_steps.assign(neuron_idx.size(), 0);
  std::vector<std::optional<SerialLayerState>> state(neuron_idx.size());
  std::vector<double> acc;
  Shape out_shape;

  for (int t = 0; t < steps; ++t) {
    std::size_t slot = 0;
    Tensor y = run_graph(net.graph, x, [&](std::size_t, const Layer& layer, Tensor cur) {
      const auto& p = neuron_params(layer);
      auto& st = state[slot];
      if (!st) {
        const auto spatial = spatial_size(cur.shape());
        const auto c = p.channels();
        std::vector<std::int64_t> channel(cur.size());
        std::vector<double> v0(cur.size());
        std::vector<float> theta(cur.size());
        for (std::size_t u = 0; u < cur.size(); ++u) {
          channel[u] = (static_cast<std::int64_t>(u) / spatial) % c;
          // psi and the DA shift, folded into the initial potential.
          v0[u] = p.shift_at(steps, channel[u]);
          theta[u] = p.pre_at(channel[u]);
        }
        st.emplace(SerialLayerState{IntegrateFireLayer(std::move(v0), std::move(theta)), std::move(channel),
                                    std::vector<std::uint8_t>(cur.size()), {}});
        if (opt.on_spikes) st->history.reserve(cur.size() * static_cast<std::size_t>(steps));
      }
      st->neurons.step(cur.data(), st->step_spikes);
      Tensor o(cur.shape());
      std::uint64_t fired = 0;
      for (std::size_t u = 0; u < cur.size(); ++u) {
        if (st->step_spikes[u]) {
          o[u] = p.post_at(st->channel[u]);
          ++fired;
        }
      }
      if (opt.on_spikes) st->history.insert(st->history.end(), st->step_spikes.begin(), st->step_spikes.end());
      out.layer_spikes[slot] += fired;
      out.layer_unit_steps[slot] += cur.size();
      ++slot;
      return o;
    });
    if (acc.empty()) {
      acc.assign(y.size(), 0.0);
      out_shape = y.shape();
    }
    for (std::size_t i = 0; i < y.size(); ++i) acc[i] += y[i];
  }

  if (opt.on_spikes) {
    for (std::size_t s = 0; s < state.size(); ++s) {
      if (!state[s]) continue;
      const auto units = state[s]->step_spikes.size();
      opt.on_spikes(neuron_idx[s], SpikeTrain::from_bits(steps, units, std::move(state[s]->history)));
    }
  }
  out.logits = Tensor(out_shape);
  for (std::size_t i = 0; i < acc.size(); ++i) out.logits[i] = static_cast<float>(acc[i] / steps);
  return out;
}

template <class ChunkFn>
InferenceReport run_chunked(const Tensor& x, const RuntimeOptions& opt, ChunkFn&& fn) {
  const auto start = Clock::now();
  if (x.rank() < 1) throw Error("input needs a batch axis");
  const auto n = x.dim(0);
  const auto workers = static_cast<std::int64_t>(std::clamp<std::int64_t>(opt.threads, 1, std::max<std::int64_t>(n, 1)));
  std::vector<ChunkOut> chunks(static_cast<std::size_t>(workers));
  if (workers == 1) {
    chunks[0] = fn(x);
  } else {
    std::vector<std::exception_ptr> errors(chunks.size());
    {
      std::vector<std::jthread> pool;
      for (std::int64_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            chunks[w] = fn(slice_batch(x, n * w / workers, n * (w + 1) / workers));
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  InferenceReport rep;
  Shape shape = chunks[0].logits.shape();
  shape[0] = n;
  std::vector<float> logits;
  logits.reserve(static_cast<std::size_t>(numel(shape)));
  std::vector<std::uint64_t> spikes(chunks[0].layer_spikes.size(), 0), unit_steps(spikes.size(), 0);
  for (const auto& c : chunks) {
    logits.insert(logits.end(), c.logits.data().begin(), c.logits.data().end());
    for (std::size_t l = 0; l < spikes.size(); ++l) {
      spikes[l] += c.layer_spikes[l];
      unit_steps[l] += c.layer_unit_steps[l];
    }
    rep.sorting_violations += c.violations;
  }
  rep.logits = Tensor(std::move(shape), std::move(logits));
  for (std::size_t l = 0; l < spikes.size(); ++l) {
    rep.spikes += spikes[l];
    rep.unit_steps += unit_steps[l];
    if (opt.record_rates) {
      rep.layer_rates.push_back(unit_steps[l] ? static_cast<double>(spikes[l]) / static_cast<double>(unit_steps[l]) : 0.0);
    }
  }
  rep.firing_sparsity = rep.unit_steps ? static_cast<double>(rep.spikes) / static_cast<double>(rep.unit_steps) : 0.0;
  if (rep.logits.rank() == 2) rep.top1 = argmax_rows(rep.logits);
  rep.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return rep;
}

}  // namespace

InferenceReport snn_parallel_forward(const ConvertedNetwork& net, const Tensor& x, int steps,
                                     const RuntimeOptions& options) {
  check_steps(net, steps);
  if (options.backend == Backend::Serial) throw Error("snn_parallel_forward called with the serial backend");
  return run_chunked(x, options, [&](const Tensor& part) { return parallel_chunk(net, part, steps, options); });
}

InferenceReport snn_serial_forward(const ConvertedNetwork& net, const Tensor& x, int steps,
                                   const RuntimeOptions& options) {
  check_steps(net, steps);
  return run_chunked(x, options, [&](const Tensor& part) { return serial_chunk(net, part, steps, options); });
}

InferenceReport snn_forward(const ConvertedNetwork& net, const Tensor& x, int steps, const RuntimeOptions& options) {
  return options.backend == Backend::Serial ? snn_serial_forward(net, x, steps, options)
                                            : snn_parallel_forward(net, x, steps, options);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty()) throw Error("accuracy of an empty dataset");
  if (predictions.size() != labels.size()) throw Error("prediction/label count mismatch");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double agreement(std::span<const int> a, std::span<const int> b) { return accuracy(a, b); }

namespace {

template <class Fn>
EvalResult evaluate_batched(const Tensor& inputs, std::span<const int> labels, std::size_t batch_size, Fn&& predict) {
  if (inputs.rank() < 1 || inputs.dim(0) == 0) throw Error("cannot evaluate an empty dataset");
  if (static_cast<std::size_t>(inputs.dim(0)) != labels.size()) throw Error("input/label count mismatch");
  if (batch_size == 0) throw Error("batch size must be positive");
  EvalResult r;
  r.samples = labels.size();
  const auto n = inputs.dim(0);
  for (std::int64_t b = 0; b < n; b += static_cast<std::int64_t>(batch_size)) {
    const auto e = std::min<std::int64_t>(n, b + static_cast<std::int64_t>(batch_size));
    auto p = predict(slice_batch(inputs, b, e));
    r.predictions.insert(r.predictions.end(), p.begin(), p.end());
  }
  r.accuracy = accuracy(r.predictions, labels);
  return r;
}

}  // namespace

EvalResult evaluate(const LayerGraph& graph, const Tensor& inputs, std::span<const int> labels, std::size_t batch_size) {
  return evaluate_batched(inputs, labels, batch_size,
                          [&](const Tensor& xb) { return argmax_rows(ann_forward(graph, xb)); });
}

EvalResult evaluate(const ConvertedNetwork& net, const Tensor& inputs, std::span<const int> labels,
                    const RuntimeOptions& options, std::size_t batch_size) {
  return evaluate_batched(inputs, labels, batch_size,
                          [&](const Tensor& xb) { return snn_forward(net, xb, net.steps, options).top1; });
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

template <class Fn>
double median_time(int warmup, int repeats, Fn&& fn) {
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> times;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = Clock::now();
    fn();
    times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return median(std::move(times));
}

}  // namespace

std::vector<BenchRow> bench(const std::function<ConvertedNetwork(int)>& network_for, const Tensor& inputs,
                            std::span<const int> steps_list, const BenchConfig& config) {
  if (config.repeats < 1 || config.warmup < 0) throw Error("bench needs repeats >= 1 and warmup >= 0");
  if (config.parallel_backend == Backend::Serial) throw Error("bench parallel backend cannot be serial");
  std::vector<BenchRow> rows;
  for (int steps : steps_list) {
    const ConvertedNetwork net = network_for(steps);
    RuntimeOptions serial;
    serial.backend = Backend::Serial;
    serial.threads = config.threads;
    RuntimeOptions parallel = serial;
    parallel.backend = config.parallel_backend;
    BenchRow row;
    row.steps = steps;
    row.batch = inputs.dim(0);
    row.threads = config.threads;
    row.serial_time =
        median_time(config.warmup, config.repeats, [&] { (void)snn_serial_forward(net, inputs, steps, serial); });
    row.parallel_time =
        median_time(config.warmup, config.repeats, [&] { (void)snn_parallel_forward(net, inputs, steps, parallel); });
    row.ratio = row.parallel_time > 0 ? row.serial_time / row.parallel_time : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<BenchRow> bench(const LayerGraph& source, const Tensor& inputs, std::span<const int> steps_list,
                            const BenchConfig& config) {
  return bench([&](int steps) { return convert(init_da_params(source, steps), steps); }, inputs, steps_list, config);
}

}  // namespace pcsnn
