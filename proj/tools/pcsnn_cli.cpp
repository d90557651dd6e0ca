// pcsnn: convert, evaluate and benchmark parallel-spiking networks.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcsnn/converter.hpp"
#include "pcsnn/dataset.hpp"
#include "pcsnn/model_io.hpp"
#include "pcsnn/runtime.hpp"
#include "pcsnn/synth_model.hpp"
#include "verify/criteria.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace pcsnn;

// JSON lines go to stdout or, with --report, to a file.
class Report {
 public:
  void open(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw Error("cannot write report " + path);
  }
  void emit(const json& j) {
    std::ostream& os = file_ ? *file_ : std::cout;
    os << j.dump() << '\n';
    os.flush();
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

Shape parse_shape(const std::string& text) {
  Shape s;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      s.push_back(std::stoll(part));
    } catch (const std::exception&) {
      throw Error("bad shape '" + text + "'");
    }
  }
  return s;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (auto v : parse_shape(text)) {
    if (v < 1) throw Error("time-step lists take positive integers, got '" + text + "'");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw Error("empty list");
  return out;
}

int default_threads() {
  if (const char* env = std::getenv("PCSNN_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t >= 1) return t;
    } catch (const std::exception&) {
    }
    throw Error(std::string("PCSNN_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

std::int64_t output_classes(const LayerGraph& g) {
  const auto shapes = infer_shapes(g);
  if (shapes.empty() || shapes.back().size() != 1) throw Error("model output is not a [classes] vector");
  return shapes.back()[0];
}

/// `synthetic` (generated for the model's input shape) or a CIFAR-10 binary file.
Dataset load_data(const std::string& spec, const LayerGraph& g, std::uint64_t seed, std::int64_t samples,
                  Split split) {
  if (spec == "synthetic") {
    return synth_dataset(seed, g.input_shape, static_cast<int>(output_classes(g)), samples, split);
  }
  Dataset d = load_cifar10(spec, samples);
  d.split = split;
  return d;
}

struct ConvertArgs {
  std::string conversion_case = "qcfs-eq", model, calib_data = "synthetic", out;
  int steps = 0, epochs = 1, batch = 32;
  double alpha = 0.99;
  std::int64_t samples = 512;
  std::uint64_t seed = 0;
};

int run_convert(const ConvertArgs& a, Report& report) {
  const LayerGraph source = load_model(a.model);
  CalibrationConfig cc;
  cc.conversion_case = parse_conversion_case(a.conversion_case);
  cc.alpha = a.alpha;
  cc.epochs = a.epochs;
  cc.batch_size = a.batch;
  cc.seed = a.seed;
  cc.validate();

  int steps = a.steps;
  std::vector<Tensor> batches;
  if (cc.conversion_case == ConversionCase::QcfsEqual) {
    if (steps == 0) steps = convert_qcfs_exact(source).steps;
  } else {
    if (steps < 1) throw Error("--T is required for qcfs-neq and relu conversion");
    batches = load_data(a.calib_data, source, a.seed, a.samples, Split::Calibration).batches(static_cast<std::size_t>(a.batch));
  }
  const ConvertedNetwork net = convert_network(source, steps, batches, cc);
  save_converted(net, a.out);

  json j;
  j["command"] = "convert";
  j["case"] = to_string(net.conversion_case);
  j["T"] = net.steps;
  j["neuron_layers"] = net.graph.neuron_layers().size();
  j["calibration_batches"] = batches.size();
  j["out"] = a.out;
  report.emit(j);
  return 0;
}

struct EvalArgs {
  std::string model, snn, data = "synthetic", backend = "parallel-fast";
  int steps = 0, threads = 0;
  std::int64_t samples = 1000, batch = 64;
  std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a, Report& report) {
  if (a.model.empty() && a.snn.empty()) throw Error("eval needs --model, --snn or both");
  std::optional<LayerGraph> ann;
  std::optional<ConvertedNetwork> snn;
  if (!a.model.empty()) ann = load_model(a.model);
  if (!a.snn.empty()) snn = load_converted(a.snn);
  const LayerGraph& shape_source = ann ? *ann : snn->graph;
  const Dataset data = load_data(a.data, shape_source, a.seed, a.samples, Split::Evaluation);

  json j;
  j["command"] = "eval";
  j["data"] = data.source;
  j["samples"] = data.size();
  std::optional<EvalResult> ann_res, snn_res;
  if (ann) {
    ann_res = evaluate(*ann, data.inputs, data.labels, static_cast<std::size_t>(a.batch));
    j["ann_accuracy"] = ann_res->accuracy;
  }
  if (snn) {
    if (a.steps != 0 && a.steps != snn->steps) {
      throw Error("--T " + std::to_string(a.steps) + " does not match the converted network (T=" +
                  std::to_string(snn->steps) + ")");
    }
    RuntimeOptions ro;
    ro.backend = parse_backend(a.backend);
    ro.threads = a.threads > 0 ? a.threads : default_threads();
    // One pass for spike statistics over the whole set, batched for accuracy.
    std::uint64_t spikes = 0, unit_steps = 0;
    double wall = 0.0;
    std::vector<int> predictions;
    for (const Tensor& xb : data.batches(static_cast<std::size_t>(a.batch))) {
      const auto rep = snn_forward(*snn, xb, snn->steps, ro);
      predictions.insert(predictions.end(), rep.top1.begin(), rep.top1.end());
      spikes += rep.spikes;
      unit_steps += rep.unit_steps;
      wall += rep.wall_time;
    }
    snn_res = EvalResult{predictions.size(), accuracy(predictions, data.labels), predictions};
    j["T"] = snn->steps;
    j["case"] = to_string(snn->conversion_case);
    j["backend"] = to_string(ro.backend);
    j["threads"] = ro.threads;
    j["snn_accuracy"] = snn_res->accuracy;
    j["firing_sparsity"] = unit_steps ? static_cast<double>(spikes) / static_cast<double>(unit_steps) : 0.0;
    j["wall_time"] = wall;
  }
  if (ann_res && snn_res) j["agreement"] = agreement(ann_res->predictions, snn_res->predictions);
  report.emit(j);
  return 0;
}

struct BenchArgs {
  std::string model, t_list = "1,4,8,16,32,64", backend = "parallel-fast";
  int repeats = 7, warmup = 3, threads = 0;
  std::int64_t batch = 8;
  std::uint64_t seed = 0;
};

int run_bench(const BenchArgs& a, Report& report) {
  LayerGraph g;
  if (!a.model.empty()) {
    g = load_model(a.model);
  } else {
    SynthModelConfig cfg;
    cfg.arch = SynthArch::VGG;
    cfg.depth = 4;
    cfg.width = 8;
    cfg.input_shape = {3, 16, 16};
    cfg.seed = a.seed;
    g = make_synth_model(cfg);
  }
  const Dataset data = synth_dataset(a.seed, g.input_shape, static_cast<int>(output_classes(g)), a.batch);
  BenchConfig bc;
  bc.repeats = a.repeats;
  bc.warmup = a.warmup;
  bc.threads = a.threads > 0 ? a.threads : default_threads();
  bc.parallel_backend = parse_backend(a.backend);
  const auto steps = parse_int_list(a.t_list);
  for (const auto& row : bench(g, data.inputs, steps, bc)) {
    json j;
    j["command"] = "bench";
    j["T"] = row.steps;
    j["batch"] = row.batch;
    j["threads"] = row.threads;
    j["repeats"] = bc.repeats;
    j["serial_time"] = row.serial_time;
    j["parallel_time"] = row.parallel_time;
    j["ratio"] = row.ratio;
    report.emit(j);
  }
  return 0;
}

struct SelftestArgs {
  std::uint64_t seed = 0;
  bool quick = false;
  std::vector<int> only;
};

int run_selftest(const SelftestArgs& a, Report& report) {
  verify::Options opt{a.seed, a.quick};
  int failed = 0;
  for (const auto& c : verify::criteria()) {
    if (!a.only.empty() && std::find(a.only.begin(), a.only.end(), c.id) == a.only.end()) continue;
    const auto r = verify::run_criterion(c, opt);
    json j;
    j["command"] = "selftest";
    j["criterion"] = r.id;
    j["name"] = r.name;
    j["pass"] = r.pass;
    j["detail"] = r.detail;
    j["wall_time"] = r.seconds;
    report.emit(j);
    failed += !r.pass;
  }
  if (failed) std::cerr << "selftest: " << failed << " check(s) failed\n";
  return failed ? 1 : 0;
}

struct SynthArgs {
  std::string arch = "mlp", activation = "qcfs", input_shape, out;
  int depth = 4, width = 64, classes = 10, levels = 8;
  float theta = 1.0f;
  std::uint64_t seed = 0;
};

int run_make_synth(const SynthArgs& a, Report& report) {
  SynthModelConfig cfg;
  cfg.arch = parse_synth_arch(a.arch);
  cfg.activation = parse_activation_kind(a.activation);
  cfg.depth = a.depth;
  cfg.width = a.width;
  cfg.classes = a.classes;
  cfg.levels = a.levels;
  cfg.theta = a.theta;
  cfg.seed = a.seed;
  if (!a.input_shape.empty()) {
    cfg.input_shape = parse_shape(a.input_shape);
  } else if (cfg.arch != SynthArch::MLP) {
    cfg.input_shape = {3, 32, 32};
  }
  const LayerGraph g = make_synth_model(cfg);
  save_model(g, a.out);
  json j;
  j["command"] = "make-synth-model";
  j["arch"] = a.arch;
  j["activation"] = a.activation;
  j["layers"] = g.layers.size();
  j["out"] = a.out;
  report.emit(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel spiking network conversion and inference"};
  app.require_subcommand(1);
  std::string report_path;
  app.add_option("--report", report_path, "Write JSON-lines output to this file instead of stdout");

  ConvertArgs conv;
  auto* convert = app.add_subcommand("convert", "Convert a model into a parallel spiking network");
  convert->add_option("--case", conv.conversion_case, "qcfs-eq | qcfs-neq | relu")
      ->check(CLI::IsMember({"qcfs-eq", "qcfs-neq", "relu"}));
  convert->add_option("--model", conv.model, "Source model manifest")->required();
  convert->add_option("--calib-data", conv.calib_data, "CIFAR-10 binary file or 'synthetic'");
  convert->add_option("--calib-samples", conv.samples, "Calibration samples to use");
  convert->add_option("--T", conv.steps, "Time steps");
  convert->add_option("--alpha", conv.alpha, "Calibration momentum");
  convert->add_option("--epochs", conv.epochs, "Calibration epochs");
  convert->add_option("--batch-size", conv.batch, "Calibration batch size");
  convert->add_option("--seed", conv.seed, "Seed for synthetic data and batch order");
  convert->add_option("--out", conv.out, "Output manifest (blob written next to it)")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate an ANN, a converted SNN or both");
  eval->add_option("--model", ev.model, "ANN manifest");
  eval->add_option("--snn", ev.snn, "Converted network manifest");
  eval->add_option("--data", ev.data, "CIFAR-10 binary file or 'synthetic'");
  eval->add_option("--samples", ev.samples, "Samples to evaluate");
  eval->add_option("--T", ev.steps, "Time steps (must match the converted network)");
  eval->add_option("--backend", ev.backend, "serial | parallel-full | parallel-fast")
      ->check(CLI::IsMember({"serial", "parallel-full", "parallel-fast"}));
  eval->add_option("--batch-size", ev.batch, "Evaluation batch size");
  eval->add_option("--threads", ev.threads, "Worker threads (default: PCSNN_THREADS or 1)");
  eval->add_option("--seed", ev.seed, "Seed for synthetic data");

  BenchArgs bn;
  auto* benchc = app.add_subcommand("bench", "Serial vs parallel inference wall time");
  benchc->add_option("--model", bn.model, "QCFS or ClipReLU model manifest (default: synthetic VGG)");
  benchc->add_option("--T-list", bn.t_list, "Comma-separated time steps");
  benchc->add_option("--repeats", bn.repeats, "Timed runs per point");
  benchc->add_option("--warmup", bn.warmup, "Untimed runs per point");
  benchc->add_option("--threads", bn.threads, "Worker threads (default: PCSNN_THREADS or 1)");
  benchc->add_option("--batch", bn.batch, "Batch size");
  benchc->add_option("--backend", bn.backend, "parallel-fast | parallel-full")
      ->check(CLI::IsMember({"parallel-full", "parallel-fast"}));
  benchc->add_option("--seed", bn.seed, "Seed for the synthetic model and inputs");

  SelftestArgs st;
  auto* selftest = app.add_subcommand("selftest", "Run the invariant suite");
  selftest->add_option("--seed", st.seed, "Seed for every generated case")->required();
  selftest->add_flag("--quick", st.quick, "Smaller corpora, same tolerances");
  selftest->add_option("--only", st.only, "Run only these criterion ids")->delimiter(',');

  SynthArgs sy;
  auto* synth = app.add_subcommand("make-synth-model", "Write a random-weight model");
  synth->add_option("--arch", sy.arch, "mlp | conv | vgg | resnet")->check(CLI::IsMember({"mlp", "conv", "vgg", "resnet"}));
  synth->add_option("--activation", sy.activation, "qcfs | relu")->check(CLI::IsMember({"qcfs", "relu"}));
  synth->add_option("--depth", sy.depth, "Hidden activation layers / residual blocks");
  synth->add_option("--width", sy.width, "Hidden units or base channels");
  synth->add_option("--input-shape", sy.input_shape, "Comma-separated per-sample shape");
  synth->add_option("--classes", sy.classes, "Output classes");
  synth->add_option("--levels", sy.levels, "QCFS quantization levels");
  synth->add_option("--theta", sy.theta, "QCFS threshold");
  synth->add_option("--seed", sy.seed, "Weight seed")->required();
  synth->add_option("--out", sy.out, "Output manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    Report report;
    report.open(report_path);
    if (*convert) return run_convert(conv, report);
    if (*eval) return run_eval(ev, report);
    if (*benchc) return run_bench(bn, report);
    if (*selftest) return run_selftest(st, report);
    if (*synth) return run_make_synth(sy, report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
