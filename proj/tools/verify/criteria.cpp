#include "criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "pcsnn/converter.hpp"
#include "pcsnn/dataset.hpp"
#include "pcsnn/runtime.hpp"
#include "pcsnn/synth_model.hpp"

namespace pcsnn::verify {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

int ceil_log2(int t) {
  int bits = 0;
  while ((1 << bits) < t) ++bits;
  return bits;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

CriterionResult result(int id, bool pass, std::string detail) { return {id, {}, pass, std::move(detail), 0.0}; }

Tensor random_inputs(Rng& rng, std::int64_t n, const Shape& sample, double lo, double hi) {
  Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  Tensor x(s);
  for (auto& v : x.data()) v = static_cast<float>(uniform(rng, lo, hi));
  return x;
}

// Distance (in input units) from a to the nearest jump of a QCFS staircase
// with the given parameters; jumps sit where (a*L + psi)/theta is an integer in [1, L].
double staircase_gap(double a, double theta, int levels, double psi) {
  const double u = (a * levels + psi) / theta;
  double best = std::numeric_limits<double>::infinity();
  for (double k : {std::floor(u), std::ceil(u)}) {
    if (k < 1 || k > levels) continue;
    best = std::min(best, std::abs(u - k) * theta / levels);
  }
  return best;
}

// ---------------------------------------------------------------------------
// 1. QCFS network at its own level count: parallel SNN logits == ANN logits.

CriterionResult lossless(const Options& o) {
  const int nets = 20;
  const std::int64_t inputs = o.quick ? 100 : 1000;
  const int steps_list[] = {1, 2, 4, 8, 16};
  Rng rng(o.seed ^ 0x1001);
  std::uint64_t compared = 0, excluded = 0, mismatched = 0;
  double worst = 0.0;
  std::string first_failure;

  for (int s = 0; s < nets; ++s) {
    for (int steps : steps_list) {
      SynthModelConfig cfg;
      cfg.seed = o.seed * 7919 + static_cast<std::uint64_t>(s);
      cfg.levels = steps;
      cfg.theta = static_cast<float>(uniform(rng, 0.5, 2.0));
      cfg.activation = ActivationKind::QCFS;
      if (s % 2 == 0) {
        cfg.arch = SynthArch::MLP;
        cfg.depth = 4;
        cfg.width = 32;
        cfg.input_shape = {16};
      } else {
        cfg.arch = SynthArch::Conv;
        cfg.depth = 2 + (s / 2) % 3;
        cfg.width = 6;
        cfg.input_shape = {3, 8, 8};
      }
      const LayerGraph g = make_synth_model(cfg);
      const Tensor x = random_inputs(rng, inputs, cfg.input_shape, -1.0, 1.0);

      std::vector<double> gap(static_cast<std::size_t>(inputs), std::numeric_limits<double>::infinity());
      const Tensor ann = ann_forward(g, x, [&](std::size_t, const ActivationSpec& spec, const Tensor& pre) {
        const auto per_sample = pre.size() / static_cast<std::size_t>(inputs);
        const auto spatial = static_cast<std::size_t>(spatial_size(pre.shape()));
        const auto channels = static_cast<std::size_t>(pre.dim(1));
        for (std::size_t i = 0; i < pre.size(); ++i) {
          const auto c = static_cast<std::int64_t>((i / spatial) % channels);
          const double theta = channel_value(spec.theta, c);
          const double rel = staircase_gap(pre[i], theta, spec.levels, channel_value(spec.psi, c)) / theta;
          auto& g_i = gap[i / per_sample];
          g_i = std::min(g_i, rel);
        }
      });
      const ConvertedNetwork net = convert_qcfs_exact(g);
      const InferenceReport snn = snn_parallel_forward(net, x, steps);

      const auto classes = static_cast<std::size_t>(ann.dim(1));
      for (std::int64_t n = 0; n < inputs; ++n) {
        if (gap[n] < 1e-6) {
          ++excluded;
          continue;
        }
        ++compared;
        bool ok = true;
        for (std::size_t k = 0; k < classes; ++k) {
          const double a = ann[n * classes + k], b = snn.logits[n * classes + k];
          const double d = std::abs(a - b);
          const double rel = a == 0.0 ? (d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()) : d / std::abs(a);
          worst = std::max(worst, rel);
          if (!(d <= 1e-5 * std::abs(a))) ok = false;
        }
        if (!ok) {
          ++mismatched;
          if (first_failure.empty()) {
            first_failure = "; first mismatch: net " + std::to_string(s) + " T=" + std::to_string(steps) + " sample " +
                            std::to_string(n);
          }
        }
      }
    }
  }
  return result(1, mismatched == 0 && compared > 0,
                std::to_string(compared) + " inputs compared, " + std::to_string(excluded) +
                    " near a boundary excluded, " + std::to_string(mismatched) + " mismatched, worst relative error " +
                    fmt(worst) + first_failure);
}

// ---------------------------------------------------------------------------
// 2-3. Fuzzed parallel neurons.

struct FuzzGroup {
  ParallelNeuronParams params;
  Tensor current;  // [T, units]
};

FuzzGroup fuzz_group(Rng& rng, int steps, std::int64_t units, bool per_channel) {
  const std::int64_t c = per_channel ? units : 1;
  Tensor theta({c}), psi({c}), psi_da({c});
  for (std::int64_t i = 0; i < c; ++i) {
    theta[i] = static_cast<float>(uniform(rng, 0.1, 4.0));
    psi[i] = static_cast<float>(theta[i] * uniform(rng, 0.0, 1.0));
    psi_da[i] = static_cast<float>(theta[i] * uniform(rng, -0.25, 0.25));
  }
  if (!per_channel) {
    theta = theta.reshaped({});
    psi = psi.reshaped({});
    psi_da = psi_da.reshaped({});
  }
  FuzzGroup g;
  g.params.steps = steps;
  g.params.shift = shift_vector(theta, psi, psi_da, steps);
  g.params.theta_pre = theta;
  g.params.theta_post = theta;
  g.current = Tensor({steps, units});
  for (int t = 0; t < steps; ++t) {
    for (std::int64_t u = 0; u < units; ++u) {
      const double th = channel_value(theta, per_channel ? u : 0);
      g.current[t * units + u] = static_cast<float>(th * uniform(rng, -0.5, 1.5));
    }
  }
  return g;
}

template <class Fn>
void for_each_fuzz_group(std::uint64_t seed, std::int64_t total_units, Fn&& fn) {
  Rng rng(seed);
  constexpr std::int64_t kUnits = 64;
  std::int64_t done = 0;
  for (int g = 0; done < total_units; ++g) {
    const int steps = 1 + g % 64;
    const auto units = std::min(kUnits, total_units - done);
    fn(fuzz_group(rng, steps, units, g % 4 != 3));
    done += units;
  }
}

CriterionResult fast_path(const Options& o) {
  const std::int64_t total = o.quick ? 10000 : 100000;
  std::uint64_t mismatched_units = 0, over_bound_units = 0;
  int worst_excess = std::numeric_limits<int>::min();
  int excess_at = 0;
  std::vector<int> worst_by_t(65, 0);
  for_each_fuzz_group(o.seed ^ 0x2002, total, [&](const FuzzGroup& g) {
    const int steps = g.params.steps;
    const SpikeTrain full = pc_fire_full(g.current, g.params);
    const auto sums = temporal_sum(g.current);
    const auto units = static_cast<std::size_t>(g.current.dim(1));
    const int bound = ceil_log2(steps);
    for (std::size_t u = 0; u < units; ++u) {
      int evals = 0;
      const int first = first_fire_step(sums[u], g.params, g.params.channels() == 1 ? 0 : static_cast<std::int64_t>(u),
                                         evals);
      worst_by_t[steps] = std::max(worst_by_t[steps], evals);
      if (evals > bound) ++over_bound_units;
      if (evals - bound > worst_excess) {
        worst_excess = evals - bound;
        excess_at = steps;
      }
      if (first != full.first_fire(u)) ++mismatched_units;
    }
    const FastFire fast = pc_fire_fast(sums, g.params);
    if (!(fast.spikes == full)) ++mismatched_units;
  });
  std::string detail = std::to_string(total) + " neurons: " + std::to_string(mismatched_units) +
                       " fast/full mismatches; " + std::to_string(over_bound_units) +
                       " units exceed ceil(log2 T) predicate evaluations (worst excess " +
                       std::to_string(worst_excess) + " at T=" + std::to_string(excess_at) + ")";
  if (over_bound_units > 0) {
    detail += "; T+1 outcomes need ceil(log2(T+1)) tests, which is ceil(log2 T)+1 when T is a power of two";
  }
  return result(2, mismatched_units == 0 && over_bound_units == 0, detail);
}

CriterionResult sorting(const Options& o) {
  const std::int64_t total = o.quick ? 10000 : 100000;
  std::uint64_t violations = 0, columns = 0;
  // Same corpus as the fast-path check.
  for_each_fuzz_group(o.seed ^ 0x2002, total, [&](const FuzzGroup& g) {
    const SpikeTrain full = pc_fire_full(g.current, g.params);
    for (std::size_t u = 0; u < full.units(); ++u) {
      ++columns;
      bool seen = false;
      for (int x = 1; x <= full.steps(); ++x) {
        const bool f = full.fires(x, u);
        if (seen && !f) {
          ++violations;
          break;
        }
        seen = seen || f;
      }
    }
  });
  return result(3, violations == 0,
                std::to_string(columns) + " spike-train columns, " + std::to_string(violations) + " not of the form 0..01..1");
}

// ---------------------------------------------------------------------------
// 4. Redistributing per-step current at fixed sum changes nothing.

CriterionResult permutation(const Options& o) {
  const int cases = o.quick ? 1000 : 10000;
  constexpr std::int64_t units = 8;
  constexpr double quantum = 0x1.0p-12;  // dyadic currents keep every partial sum exact
  Rng rng(o.seed ^ 0x4004);
  int changed = 0;
  for (int k = 0; k < cases; ++k) {
    const int steps = uniform_int(rng, 1, 64);
    FuzzGroup g = fuzz_group(rng, steps, units, k % 2 == 0);
    for (auto& v : g.current.data()) v = static_cast<float>(std::round(v / quantum) * quantum);
    Tensor moved = g.current;
    for (std::int64_t u = 0; u < units; ++u) {
      std::vector<float> col(static_cast<std::size_t>(steps));
      for (int t = 0; t < steps; ++t) col[t] = moved[t * units + u];
      std::shuffle(col.begin(), col.end(), rng);
      for (int r = 0; r < 3 && steps > 1; ++r) {
        const int i = uniform_int(rng, 0, steps - 1), j = uniform_int(rng, 0, steps - 1);
        const float d = static_cast<float>(uniform_int(rng, -4096, 4096) * quantum);
        col[i] += d;
        col[j] -= d;
      }
      for (int t = 0; t < steps; ++t) moved[t * units + u] = col[t];
    }
    const auto before = temporal_sum(g.current), after = temporal_sum(moved);
    if (before != after) throw Error("redistribution changed a temporal sum; test corpus is not exact");
    if (!(pc_fire_full(g.current, g.params) == pc_fire_full(moved, g.params))) ++changed;
  }
  return result(4, changed == 0,
                std::to_string(cases) + " cases, " + std::to_string(changed) + " with any output bit changed");
}

// ---------------------------------------------------------------------------
// 5. Serial IF with v0 = theta/2 reproduces the QCFS spike count.

CriterionResult serial_if(const Options& o) {
  const int cases = o.quick ? 10000 : 100000;
  Rng rng(o.seed ^ 0x5005);
  int tested = 0, skipped = 0, wrong = 0;
  while (tested < cases) {
    const auto theta = static_cast<float>(uniform(rng, 0.1, 4.0));
    const auto a = static_cast<float>(theta * uniform(rng, -0.2, 1.2));
    const int steps = uniform_int(rng, 1, 64);
    const double u = (static_cast<double>(a) * steps + 0.5 * theta) / theta;
    if (std::abs(u - std::round(u)) * theta / steps < 1e-6 * theta) {
      ++skipped;
      continue;
    }
    const int expected = static_cast<int>(std::clamp(std::floor(u), 0.0, static_cast<double>(steps)));
    Tensor current({steps, 1}, a);
    const std::vector<double> v0{0.5 * theta};
    const auto run = serial_if_run(current, theta, 1.0, v0);
    if (run.spikes.count(0) != expected) ++wrong;
    ++tested;
  }
  return result(5, wrong == 0,
                std::to_string(tested) + " cases, " + std::to_string(wrong) + " count mismatches, " +
                    std::to_string(skipped) + " boundary draws skipped");
}

// ---------------------------------------------------------------------------
// 6. Expected parallel rate at T equals expected QCFS output at another level count.

CriterionResult expectation(const Options& o) {
  const std::int64_t n = o.quick ? 100000 : 1000000;
  Rng rng(o.seed ^ 0x6006);
  const float theta = 1.0f;
  std::string detail;
  bool pass = true;
  for (int steps : {2, 3, 5}) {
    ParallelNeuronParams p;
    p.steps = steps;
    p.shift = shift_vector(Tensor::scalar(theta), Tensor::scalar(0.0f), steps);
    p.theta_pre = Tensor::scalar(theta);
    p.theta_post = Tensor::scalar(theta);
    for (int levels : {4, 8}) {
      std::vector<float> a(static_cast<std::size_t>(n)), sums(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<float>(uniform(rng, 0.0, theta));
        sums[i] = static_cast<float>(static_cast<double>(a[i]) * steps);
      }
      const FastFire fire = pc_fire_fast(sums, p);
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double rate = static_cast<double>(fire.spikes.count(i)) * theta / steps;
        const double q = theta / levels *
                         std::clamp(std::floor((static_cast<double>(a[i]) * levels + 0.5 * theta) / theta), 0.0,
                                    static_cast<double>(levels));
        const double d = rate - q;
        sum += d;
        sum_sq += d * d;
      }
      const double mean = sum / static_cast<double>(n);
      const double sd = std::sqrt(std::max(0.0, (sum_sq - sum * mean) / static_cast<double>(n - 1)));
      const double bound = 3.0 * sd / std::sqrt(static_cast<double>(n));
      const bool ok = std::abs(mean) <= bound;
      pass = pass && ok;
      detail += (detail.empty() ? "" : "; ") + std::string("T=") + std::to_string(steps) + "/L=" + std::to_string(levels) +
                ": |mean| " + fmt(std::abs(mean)) + (ok ? " <= " : " > ") + fmt(bound);
    }
  }
  return result(6, pass, detail);
}

// ---------------------------------------------------------------------------
// 7. Calibration lowers the post-activation error; ReLU ANN and SNN agree at T=32.

CriterionResult calibration(const Options& o) {
  const int trials = 20;
  const int calib_n = o.quick ? 256 : 1024, eval_n = o.quick ? 200 : 1000;
  int improved = 0;
  std::uint64_t agree = 0, total = 0;
  double min_agreement = 1.0;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = o.seed * 104729 + static_cast<std::uint64_t>(t);
    SynthModelConfig cfg;
    cfg.arch = SynthArch::MLP;
    cfg.activation = ActivationKind::ReLU;
    cfg.depth = 3;
    cfg.width = 64;
    cfg.input_shape = {32};
    cfg.seed = seed;
    const LayerGraph relu = make_synth_model(cfg);
    const Dataset calib = synth_dataset(seed, {32}, 10, calib_n, Split::Calibration);
    const Dataset eval = synth_dataset(seed, {32}, 10, eval_n, Split::Evaluation);
    const auto batches = calib.batches(32);

    CalibrationConfig cc;
    cc.conversion_case = ConversionCase::Relu;
    const PipelineResult at8 = training_free_pipeline(relu, batches, 8, cc);
    const double before = measure_layer_errors(init_da_params(at8.clip_graph, 8), at8.clip_graph, batches).mean_post();
    const double after = measure_layer_errors(at8.calibrated, at8.clip_graph, batches).mean_post();
    if (after < before) ++improved;

    const PipelineResult at32 = training_free_pipeline(relu, batches, 32, cc);
    const auto ann = argmax_rows(ann_forward(relu, eval.inputs));
    const auto snn = snn_parallel_forward(at32.network, eval.inputs, 32).top1;
    std::uint64_t same = 0;
    for (std::size_t i = 0; i < ann.size(); ++i) same += ann[i] == snn[i];
    agree += same;
    total += ann.size();
    min_agreement = std::min(min_agreement, static_cast<double>(same) / static_cast<double>(ann.size()));
  }
  const double agreement_rate = static_cast<double>(agree) / static_cast<double>(total);
  return result(7, improved >= 18 && agreement_rate >= 0.95,
                "error reduced in " + std::to_string(improved) + "/20 trials (need 18); T=32 agreement " +
                    fmt(agreement_rate) + " (need 0.95, worst trial " + fmt(min_agreement) + ")");
}

// ---------------------------------------------------------------------------
// 8. Serial/parallel wall-time ratio.

CriterionResult speedup(const Options& o) {
  SynthModelConfig cfg;
  cfg.arch = SynthArch::VGG;
  cfg.depth = 4;
  cfg.width = 8;
  cfg.input_shape = {3, 16, 16};
  cfg.activation = ActivationKind::QCFS;
  cfg.levels = 8;
  cfg.seed = o.seed;
  const LayerGraph g = make_synth_model(cfg);
  Rng rng(o.seed ^ 0x8008);
  const Tensor x = random_inputs(rng, 8, cfg.input_shape, -1.0, 1.0);
  const std::vector<int> steps{1, 4, 8, 16, 32, 64};
  BenchConfig bc;
  if (o.quick) {
    bc.warmup = 1;
    bc.repeats = 3;
  }
  const auto rows = bench(g, x, steps, bc);
  bool monotone = true;
  double at32 = 0.0;
  std::string table;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].ratio < rows[i - 1].ratio) monotone = false;
    if (rows[i].steps == 32) at32 = rows[i].ratio;
    table += (i ? " " : "") + std::string("T") + std::to_string(rows[i].steps) + "=" + fmt(rows[i].ratio);
  }
  return result(8, monotone && at32 >= 4.0,
                "ratio at T=32 " + fmt(at32) + " (need 4), " + (monotone ? "monotone" : "NOT monotone") + " [" + table + "]");
}

// ---------------------------------------------------------------------------
// 9. Constant-error momentum updates follow e * (1 - alpha^n).

CriterionResult momentum(const Options&) {
  // Input 0.1 sits below the first QCFS jump at T=4 (theta/(2T) = 0.125): the
  // DA output stays 0 while ClipReLU passes 0.1, so e_post is 0.1 every update.
  LayerGraph g;
  g.input_shape = {1};
  g.layers.push_back({"act", Activation{ActivationSpec::clip_relu(Tensor::scalar(1.0f))}});
  const Tensor batch({4, 1}, 0.1f);
  const double alpha = 0.99, e = static_cast<double>(0.1f);
  bool pass = true;
  std::string detail;
  for (int n : {1, 10, 100}) {
    std::vector<Tensor> batches(static_cast<std::size_t>(n), batch);
    CalibrationConfig cc;
    cc.alpha = alpha;
    cc.conversion_case = ConversionCase::QcfsDifferent;
    const LayerGraph out = calibrate(init_da_params(g, 4), g, batches, cc);
    const auto& spec = std::get<Activation>(out.layers[0].op).spec;
    const double phi = spec.phi_da[0], psi_da = spec.psi_da[0];
    const double expect = e * (1.0 - std::pow(alpha, n));
    const double rel = std::abs(phi - expect) / expect;
    // The recurrence itself, straight from the update rule.
    double direct = 0.0;
    for (int k = 0; k < n; ++k) direct = momentum_update(direct, e, alpha);
    const double rel_direct = std::abs(direct - expect) / expect;
    const bool ok = rel <= 1e-6 && rel_direct <= 1e-6 && psi_da == 0.0;
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + std::string("n=") + std::to_string(n) + ": phi " + fmt(phi) + " vs " +
              fmt(expect) + " (rel " + fmt(rel) + ")";
  }
  return result(9, pass, detail);
}

// ---------------------------------------------------------------------------
// 10. Parameter shapes of the three conversion cases.

CriterionResult table_shapes(const Options& o) {
  const int steps = 8;
  const std::int64_t width = 16;
  SynthModelConfig cfg;
  cfg.arch = SynthArch::MLP;
  cfg.depth = 3;
  cfg.width = static_cast<int>(width);
  cfg.input_shape = {12};
  cfg.levels = steps;
  cfg.seed = o.seed;
  const LayerGraph qcfs = make_synth_model(cfg);
  cfg.activation = ActivationKind::ReLU;
  const LayerGraph relu = make_synth_model(cfg);
  const Dataset calib = synth_dataset(o.seed, {12}, 10, 128, Split::Calibration);
  const auto batches = calib.batches(32);

  struct Expect {
    const char* name;
    ConvertedNetwork net;
    Shape shift, pre, post;
  };
  const int other = 4;
  CalibrationConfig neq;
  neq.conversion_case = ConversionCase::QcfsDifferent;
  CalibrationConfig rc;
  rc.conversion_case = ConversionCase::Relu;
  const Expect cases[] = {
      {"qcfs-eq", convert_qcfs_exact(qcfs), {steps}, {}, {}},
      {"qcfs-neq", convert_network(qcfs, other, batches, neq), {other, width}, {}, {width}},
      {"relu", convert_network(relu, steps, batches, rc), {steps, width}, {width}, {width}},
  };
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    std::size_t layers = 0;
    bool ok = true;
    for (auto idx : c.net.graph.neuron_layers()) {
      const auto* sn = std::get_if<SpikingNeuron>(&c.net.graph.layers[idx].op);
      if (!sn) {
        ok = false;
        continue;
      }
      ++layers;
      const auto& p = sn->params;
      const Tensor lambda = pc_matrix(p.steps);
      bool lambda_ok = lambda.shape() == Shape{p.steps, p.steps};
      for (int x = 0; x < p.steps && lambda_ok; ++x) {
        for (int i = 0; i < p.steps; ++i) lambda_ok = lambda_ok && lambda[x * p.steps + i] == lambda[x * p.steps];
      }
      ok = ok && lambda_ok && p.shift.shape() == c.shift && p.theta_pre.shape() == c.pre && p.theta_post.shape() == c.post;
    }
    ok = ok && layers == static_cast<std::size_t>(cfg.depth);
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + std::string(c.name) + (ok ? " ok" : " WRONG") + " (b " +
              to_string(c.shift) + ", theta_pre " + to_string(c.pre) + ", theta_post " + to_string(c.post) + ")";
  }
  return result(10, pass, detail);
}

constexpr CriterionInfo kCriteria[] = {
    {1, "qcfs-lossless", lossless},
    {2, "fast-path-equivalence", fast_path},
    {3, "sorting-property", sorting},
    {4, "temporal-permutation-invariance", permutation},
    {5, "serial-if-agreement", serial_if},
    {6, "rate-expectation", expectation},
    {7, "calibration-efficacy", calibration},
    {8, "speedup", speedup},
    {9, "momentum-closed-form", momentum},
    {10, "conversion-case-shapes", table_shapes},
};

}  // namespace

std::span<const CriterionInfo> criteria() { return kCriteria; }

CriterionResult run_criterion(const CriterionInfo& info, const Options& options) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = info.run(options);
  } catch (const std::exception& e) {
    r = result(info.id, false, std::string("error: ") + e.what());
  }
  r.id = info.id;
  r.name = info.name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os.precision(3);
  os << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail << " (" << std::fixed
     << r.seconds << "s)";
  return os.str();
}

}  // namespace pcsnn::verify
